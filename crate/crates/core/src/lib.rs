//! Litmus-test checking for weak memory models.
//!
//! A [`litmus::LitmusTest`] is decided two independent ways: the
//! [`axiomatic`] engine enumerates candidate executions and filters them
//! through a relational model, and the [`operational`] engine explores every
//! run of an abstract machine. Both produce a [`verdict::Verdict`] carrying
//! the full set of allowed final states, so the engines can be compared
//! state for state.

pub mod axiomatic;
pub mod dot;
pub mod litmus;
pub mod operational;
pub mod program;
pub mod relation;
pub mod verdict;

pub use program::FinalState;
