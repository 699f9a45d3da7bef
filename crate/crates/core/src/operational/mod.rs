//! Small-step operational semantics and exhaustive exploration.
//!
//! Three semantics share one state type: sequentially consistent
//! interleaving, TSO with a FIFO write buffer per core, and a pipeline
//! semantics in which each core fetches its instructions into an ordered
//! pending list and commits them out of order subject to ordering guards.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rayon::prelude::*;

use crate::litmus::{LitmusTest, Value};
use crate::program::{FinalState, Loc, Pc, Program, END};
use crate::verdict::{Engine, Verdict, Witness};

mod pipeline;
mod sc_tso;

pub use pipeline::step_pipeline;
pub use sc_tso::{step_sc, step_tso};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PipelineOptions {
    /// An acquire load also waits for earlier release stores.
    pub strong_release_acquire: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Semantics {
    Sc,
    Tso,
    Pipeline(PipelineOptions),
}

impl Semantics {
    pub const PIPELINE: Semantics = Semantics::Pipeline(PipelineOptions {
        strong_release_acquire: false,
    });

    pub fn name(&self) -> &'static str {
        match self {
            Semantics::Sc => "SC",
            Semantics::Tso => "TSO",
            Semantics::Pipeline(_) => "PIPELINE",
        }
    }
}

/// Progress through the lock-protected micro-sequence of a swap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SwapPhase {
    Idle,
    Locked,
    /// The old value has been read into the temporary.
    Read(Value),
    /// The new value has been written (or buffered).
    Written(Value),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Waiting,
    /// A swap whose read half has committed.
    Half(Value),
    /// Committed; carries the value for the destination register, if any.
    Done(Option<Value>),
}

/// A fetched instruction instance in a pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Entry {
    pub pc: Pc,
    /// The branch direction fetched down, for branches.
    pub guess: Option<bool>,
    pub status: Status,
}

impl Entry {
    pub fn is_done(&self) -> bool {
        matches!(self.status, Status::Done(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoreState {
    pub regs: Vec<Value>,
    /// Next instruction to execute (SC, TSO) or fetch (pipeline).
    pub pc: Pc,
    pub swap: SwapPhase,
    /// TSO write buffer, oldest first.
    pub buffer: Vec<(Loc, Value)>,
    /// Pipeline entries in program order.
    pub pending: Vec<Entry>,
}

impl CoreState {
    pub fn is_terminal(&self) -> bool {
        self.pc == END && self.swap == SwapPhase::Idle && self.buffer.is_empty() && self.pending.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SystemState {
    pub mem: Vec<Value>,
    pub cores: Vec<CoreState>,
    /// Core holding the global swap lock.
    pub lock: Option<usize>,
}

impl SystemState {
    pub fn initial(program: &Program) -> Self {
        SystemState {
            mem: program.init.clone(),
            cores: program
                .threads
                .iter()
                .map(|t| CoreState {
                    regs: vec![0; t.registers.len()],
                    pc: t.entry,
                    swap: SwapPhase::Idle,
                    buffer: Vec::new(),
                    pending: Vec::new(),
                })
                .collect(),
            lock: None,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.lock.is_none() && self.cores.iter().all(CoreState::is_terminal)
    }

    /// Whether `core` may touch memory: nobody else holds the lock.
    pub(crate) fn may_access(&self, core: usize) -> bool {
        self.lock.is_none_or(|holder| holder == core)
    }

    pub fn final_state(&self, program: &Program) -> FinalState {
        let regs: Vec<Vec<Value>> = self.cores.iter().map(|c| c.regs.clone()).collect();
        FinalState::from_parts(program, &self.mem, &regs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Read { loc: Loc, value: Value },
    Write { loc: Loc, value: Value },
    Fence,
    Tau,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transition {
    pub core: usize,
    pub label: Label,
}

/// One step of a trace, with names resolved.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TraceStep {
    pub thread: String,
    pub label: StepLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum StepLabel {
    Read { loc: String, value: Value },
    Write { loc: String, value: Value },
    Fence,
    Tau,
}

impl TraceStep {
    pub fn new(program: &Program, t: &Transition) -> Self {
        let label = match t.label {
            Label::Read { loc, value } => StepLabel::Read {
                loc: program.locations[loc].clone(),
                value,
            },
            Label::Write { loc, value } => StepLabel::Write {
                loc: program.locations[loc].clone(),
                value,
            },
            Label::Fence => StepLabel::Fence,
            Label::Tau => StepLabel::Tau,
        };
        TraceStep {
            thread: program.threads[t.core].name.clone(),
            label,
        }
    }
}

impl fmt::Display for StepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepLabel::Read { loc, value } => write!(f, "R {loc}={value}"),
            StepLabel::Write { loc, value } => write!(f, "W {loc}={value}"),
            StepLabel::Fence => f.write_str("F"),
            StepLabel::Tau => f.write_str("tau"),
        }
    }
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.thread, self.label)
    }
}

/// Every successor of `state` under `semantics`.
pub fn step(program: &Program, state: &SystemState, semantics: Semantics) -> Vec<(Transition, SystemState)> {
    match semantics {
        Semantics::Sc => step_sc(program, state),
        Semantics::Tso => step_tso(program, state),
        Semantics::Pipeline(opts) => step_pipeline(program, state, opts),
    }
}

/// Successors used by [`explore`]. For the pipeline, fetching is a local
/// step that commutes with everything else, so while any core has unfetched
/// code only that first core's fetches are offered.
fn reduced_step(program: &Program, state: &SystemState, semantics: Semantics) -> Vec<(Transition, SystemState)> {
    if let Semantics::Pipeline(_) = semantics {
        if let Some(core) = state.cores.iter().position(|c| c.pc != END) {
            return pipeline::fetch(program, state, core);
        }
    }
    step(program, state, semantics)
}

/// Exact set of terminal states with one shortest trace each.
#[derive(Debug, Clone)]
pub struct Exploration {
    pub finals: BTreeMap<FinalState, Vec<TraceStep>>,
    pub states: usize,
}

/// Breadth-first search over the whole state space. Levels are expanded in
/// parallel and merged in order, so results do not depend on worker count.
pub fn explore(test: &LitmusTest, semantics: Semantics) -> Exploration {
    explore_program(&Program::new(test), semantics, true)
}

/// Like [`explore`], without the fetch-first reduction.
pub fn explore_unreduced(test: &LitmusTest, semantics: Semantics) -> Exploration {
    explore_program(&Program::new(test), semantics, false)
}

fn explore_program(program: &Program, semantics: Semantics, reduce: bool) -> Exploration {
    let init = SystemState::initial(program);
    let mut index: HashMap<SystemState, usize> = HashMap::new();
    let mut parent: Vec<Option<(usize, Transition)>> = vec![None];
    index.insert(init.clone(), 0);
    let mut frontier = vec![(0usize, init)];
    let mut terminals: Vec<(usize, SystemState)> = Vec::new();

    while !frontier.is_empty() {
        let expanded: Vec<Vec<(Transition, SystemState)>> = frontier
            .par_iter()
            .map(|(_, s)| {
                if reduce {
                    reduced_step(program, s, semantics)
                } else {
                    step(program, s, semantics)
                }
            })
            .collect();
        let mut next = Vec::new();
        for ((id, state), succs) in frontier.into_iter().zip(expanded) {
            if state.is_terminal() {
                terminals.push((id, state));
                continue;
            }
            for (t, s) in succs {
                if !index.contains_key(&s) {
                    let sid = parent.len();
                    parent.push(Some((id, t)));
                    index.insert(s.clone(), sid);
                    next.push((sid, s));
                }
            }
        }
        frontier = next;
    }

    let mut finals = BTreeMap::new();
    for (id, state) in terminals {
        finals.entry(state.final_state(program)).or_insert_with(|| {
            let mut steps = Vec::new();
            let mut cur = id;
            while let Some((p, t)) = parent[cur] {
                steps.push(TraceStep::new(program, &t));
                cur = p;
            }
            steps.reverse();
            steps
        });
    }
    Exploration {
        finals,
        states: parent.len(),
    }
}

/// Decides reachability of the postcondition by exploration. The witness is
/// the trace of the first satisfying final state in sorted order.
pub fn reachable_operational(test: &LitmusTest, semantics: Semantics) -> Verdict {
    let exploration = explore(test, semantics);
    let witness = exploration
        .finals
        .iter()
        .find(|(f, _)| f.satisfies(test))
        .map(|(_, trace)| Witness::Trace(trace.clone()));
    Verdict {
        test: test.name.clone(),
        model: semantics.name().to_string(),
        engine: Engine::Operational,
        reachable: witness.is_some(),
        final_states: exploration.finals.keys().cloned().collect(),
        witness,
        counterexample: None,
        explored: exploration.states,
    }
}
