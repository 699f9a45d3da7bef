use std::collections::BTreeSet;

use rayon::prelude::*;

use super::cat::{AxiomKind, ModelSpec};
use super::enumerate::candidates;
use super::graph::{EventKind, ExecutionGraph};
use crate::litmus::LitmusTest;
use crate::relation::{Acyclicity, EventId, EventSet, Relation};
use crate::verdict::{Counterexample, Engine, Verdict, Witness};

/// A failed axiom with its witness: a cycle for `acyclic`, an offending pair
/// for `empty`, a self-loop `[e, e]` for `irreflexive`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub axiom: String,
    pub kind: AxiomKind,
    pub witness: Vec<EventId>,
}

/// Evaluates one axiom predicate. With `init` given, pairs touching those
/// events are dropped first.
pub fn axiom_holds(kind: AxiomKind, r: &Relation, init: Option<&EventSet>) -> Result<(), Vec<EventId>> {
    let filtered;
    let r = match init {
        Some(init) => {
            filtered = r.without_events(init).expect("same carrier");
            &filtered
        }
        None => r,
    };
    match kind {
        AxiomKind::Acyclic => match r.acyclic() {
            Acyclicity::Acyclic { .. } => Ok(()),
            Acyclicity::Cyclic { cycle } => Err(cycle),
        },
        AxiomKind::Empty => match r.pairs().next() {
            None => Ok(()),
            Some((a, b)) => Err(vec![a, b]),
        },
        AxiomKind::Irreflexive => match (0..r.carrier().size()).find(|&a| r.contains(a, a)) {
            None => Ok(()),
            Some(a) => Err(vec![a, a]),
        },
    }
}

/// Rotates a closed cycle `[a, .., a]` to start at its lowest-id read, if
/// it has one.
fn rotate_to_read(graph: &ExecutionGraph, cycle: Vec<EventId>) -> Vec<EventId> {
    let mut open = cycle[..cycle.len() - 1].to_vec();
    let start = open
        .iter()
        .enumerate()
        .filter(|(_, &e)| graph.events[e].kind == EventKind::Read)
        .min_by_key(|(_, &e)| e)
        .map(|(i, _)| i);
    if let Some(i) = start {
        open.rotate_left(i);
    }
    open.push(open[0]);
    open
}

/// Checks `graph` against every axiom of `model`, in order, with
/// initialisation pairs excluded.
pub fn check_model(graph: &ExecutionGraph, model: &ModelSpec) -> Result<(), Violation> {
    check_model_with(graph, model, true)
}

pub fn check_model_with(graph: &ExecutionGraph, model: &ModelSpec, exclude_init: bool) -> Result<(), Violation> {
    let mut lets: Vec<Relation> = Vec::with_capacity(model.bindings.len());
    for (_, expr) in &model.bindings {
        let r = expr.eval(graph, &lets);
        lets.push(r);
    }
    let init = exclude_init.then(|| graph.init_events());
    for axiom in &model.axioms {
        let r = axiom.expr.eval(graph, &lets);
        if let Err(witness) = axiom_holds(axiom.kind, &r, init.as_ref()) {
            let witness = if axiom.kind == AxiomKind::Acyclic {
                rotate_to_read(graph, witness)
            } else {
                witness
            };
            return Err(Violation {
                axiom: axiom.label.clone(),
                kind: axiom.kind,
                witness,
            });
        }
    }
    Ok(())
}

struct Checked {
    index: usize,
    satisfies: bool,
    outcome: Result<crate::program::FinalState, Violation>,
}

/// Decides whether the test's postcondition holds in some candidate that
/// the model allows. The witness is the allowed satisfying candidate with the
/// lowest enumeration index; when there is none, the counterexample is the
/// lowest-index satisfying candidate with its failed axiom.
pub fn reachable_axiomatic(test: &LitmusTest, model: &ModelSpec) -> Verdict {
    let mut checked: Vec<Checked> = candidates(test)
        .enumerate()
        .par_bridge()
        .map(|(index, g)| Checked {
            index,
            satisfies: g.final_state.satisfies(test),
            outcome: check_model(&g, model).map(|()| g.final_state.clone()),
        })
        .collect();
    checked.sort_by_key(|c| c.index);

    let final_states: BTreeSet<_> = checked
        .iter()
        .filter_map(|c| c.outcome.as_ref().ok().cloned())
        .collect();
    let pass = checked.iter().find(|c| c.satisfies && c.outcome.is_ok());
    let nth = |i: usize| Box::new(candidates(test).nth(i).expect("candidate index in range"));
    let witness = pass.map(|c| Witness::Graph(nth(c.index)));
    let counterexample = match pass {
        Some(_) => None,
        None => checked.iter().find(|c| c.satisfies).map(|c| {
            let violation = c.outcome.as_ref().expect_err("no satisfying candidate passes");
            Counterexample {
                candidate: c.index,
                axiom: violation.axiom.clone(),
                witness: violation.witness.clone(),
                graph: nth(c.index),
            }
        }),
    };
    Verdict {
        test: test.name.clone(),
        model: model.name.clone(),
        engine: Engine::Axiomatic,
        reachable: pass.is_some(),
        final_states,
        witness,
        counterexample,
        explored: checked.len(),
    }
}
