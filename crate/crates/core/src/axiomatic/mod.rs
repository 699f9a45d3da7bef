//! Candidate executions, derived relations and model checking.

mod cat;
mod check;
mod enumerate;
mod graph;

pub use cat::{
    armish_model, parse_model, sc_model, tso_model, Axiom, AxiomKind, ModelError, ModelSpec, RelExpr, BUILTIN_MODELS,
};
pub use check::{axiom_holds, check_model, check_model_with, reachable_axiomatic, Violation};
pub use enumerate::{candidate_bound, candidates, enumerate_candidates};
pub use graph::{Builtin, Event, EventClass, EventKind, ExecutionGraph, Tags, UnknownRelation};
