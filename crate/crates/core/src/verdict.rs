use std::collections::BTreeSet;
use std::fmt;

use crate::axiomatic::ExecutionGraph;
use crate::operational::TraceStep;
use crate::program::FinalState;
use crate::relation::EventId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engine {
    Axiomatic,
    Operational,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Axiomatic => "axiomatic",
            Engine::Operational => "operational",
        })
    }
}

#[derive(Debug, Clone)]
pub enum Witness {
    Graph(Box<ExecutionGraph>),
    Trace(Vec<TraceStep>),
}

/// Why an unreachable postcondition is unreachable: the first candidate
/// satisfying it and the axiom that candidate breaks.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub candidate: usize,
    pub axiom: String,
    pub witness: Vec<EventId>,
    pub graph: Box<ExecutionGraph>,
}

impl Counterexample {
    /// The witness as event names, e.g. `a2 -> b1 -> b2 -> a1 -> a2`.
    pub fn describe(&self) -> String {
        let names: Vec<String> = self.witness.iter().map(|&e| self.graph.name(e)).collect();
        names.join(" -> ")
    }
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub test: String,
    pub model: String,
    pub engine: Engine,
    pub reachable: bool,
    /// Every final state the model or semantics allows.
    pub final_states: BTreeSet<FinalState>,
    /// A satisfying execution when reachable.
    pub witness: Option<Witness>,
    pub counterexample: Option<Counterexample>,
    /// Candidates checked (axiomatic) or states visited (operational).
    pub explored: usize,
}
