//! Resolution of `--model` arguments and expect-block keys.

use std::path::Path;

use wmm_core::axiomatic::{armish_model, parse_model, sc_model, tso_model, ModelSpec};
use wmm_core::operational::Semantics;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Sc,
    Tso,
    Arm,
}

impl Family {
    pub fn axiomatic(self) -> ModelSpec {
        match self {
            Family::Sc => sc_model(),
            Family::Tso => tso_model(),
            Family::Arm => armish_model(),
        }
    }

    pub fn operational(self) -> Semantics {
        match self {
            Family::Sc => Semantics::Sc,
            Family::Tso => Semantics::Tso,
            Family::Arm => Semantics::PIPELINE,
        }
    }
}

/// Built-in name lookup, case-insensitive. Returns the display name.
pub fn builtin(name: &str) -> Option<(&'static str, Family)> {
    Some(match name.to_ascii_lowercase().as_str() {
        "sc" => ("SC", Family::Sc),
        "tso" => ("TSO", Family::Tso),
        "x86" => ("x86", Family::Tso),
        "arm" | "armish" => ("ARM", Family::Arm),
        "riscv" | "risc-v" => ("RISCV", Family::Arm),
        "pipeline" => ("PIPELINE", Family::Arm),
        _ => return None,
    })
}

/// The models behind `--all-models`, one per column of the usual matrix.
pub const ALL_MODELS: [&str; 4] = ["SC", "TSO", "ARM", "RISCV"];

#[derive(Debug, Clone)]
pub enum Source {
    Builtin(Family),
    /// A model file; axiomatic only.
    File,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub name: String,
    pub source: Source,
    pub axiomatic: ModelSpec,
    pub operational: Option<Semantics>,
}

impl Model {
    pub fn resolve(arg: &str) -> Result<Model, CliError> {
        if let Some((name, family)) = builtin(arg) {
            return Ok(Model {
                name: name.to_string(),
                source: Source::Builtin(family),
                axiomatic: family.axiomatic(),
                operational: Some(family.operational()),
            });
        }
        let path = Path::new(arg);
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let spec = parse_model(&text).map_err(|source| CliError::Model {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Model {
            name: spec.name.clone(),
            source: Source::File,
            axiomatic: spec,
            operational: None,
        })
    }

    /// Whether an expect-block key names this model.
    pub fn answers_to(&self, key: &str) -> bool {
        match (&self.source, builtin(key)) {
            (Source::Builtin(f), Some((_, g))) => *f == g,
            (Source::File, None) => self.name.eq_ignore_ascii_case(key),
            _ => false,
        }
    }
}
