//! The `wmm` harness: runs litmus tests against memory models with either
//! engine, compares the engines and checks recorded expectations.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use wmm_core::axiomatic::{reachable_axiomatic, ModelError};
use wmm_core::litmus::{load_corpus, parse_litmus, CorpusError, Expectation, LitmusError, LitmusTest};
use wmm_core::operational::reachable_operational;
use wmm_core::verdict::Engine;

mod models;
mod report;

pub use models::{builtin, Family, Model, Source, ALL_MODELS};
pub use report::{render, Report, Row};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Parse {
        path: PathBuf,
        #[source]
        source: LitmusError,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{}: {source}", path.display())]
    Model {
        path: PathBuf,
        #[source]
        source: ModelError,
    },
    #[error("test {test}: expect block names unknown model `{name}`")]
    UnknownExpectModel { test: String, name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineChoice {
    Axiomatic,
    Operational,
    Both,
}

impl EngineChoice {
    fn runs(self, engine: Engine) -> bool {
        matches!(
            (self, engine),
            (EngineChoice::Both, _)
                | (EngineChoice::Axiomatic, Engine::Axiomatic)
                | (EngineChoice::Operational, Engine::Operational)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Json,
    Dot,
    Trace,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Litmus files or directories of them.
    pub paths: Vec<PathBuf>,
    /// Built-in model names or model-file paths.
    pub models: Vec<String>,
    pub engine: EngineChoice,
    pub format: Format,
    /// Compare verdicts against each test's expect block.
    pub check_expect: bool,
    /// Expected verdict for every row, overriding expect blocks.
    pub expect: Option<Expectation>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.paths.is_empty() {
            return Err(CliError::Usage("no test paths given".into()));
        }
        if self.models.is_empty() {
            return Err(CliError::Usage("no model given; use --model or --all-models".into()));
        }
        if self.format == Format::Dot && self.engine == EngineChoice::Operational {
            return Err(CliError::Usage("--format dot requires the axiomatic engine".into()));
        }
        if self.format == Format::Trace && self.engine == EngineChoice::Axiomatic {
            return Err(CliError::Usage("--format trace requires the operational engine".into()));
        }
        Ok(())
    }
}

/// Loads tests in argument order; directories contribute their `.litmus`
/// files sorted by name.
pub fn load_tests(paths: &[PathBuf]) -> Result<Vec<LitmusTest>, CliError> {
    let mut tests = Vec::new();
    for path in paths {
        if path.is_dir() {
            tests.extend(load_corpus(path)?);
        } else {
            tests.push(load_file(path)?);
        }
    }
    Ok(tests)
}

fn load_file(path: &Path) -> Result<LitmusTest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_litmus(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// The recorded expectation for `test` under `model`, preferring a key that
/// names the model exactly over one that only shares its family.
fn recorded(test: &LitmusTest, model: &Model) -> Option<Expectation> {
    let exp = test.expectations.as_ref()?;
    exp.iter()
        .find(|(k, _)| k.eq_ignore_ascii_case(&model.name))
        .or_else(|| exp.iter().find(|(k, _)| model.answers_to(k)))
        .map(|(_, e)| *e)
}

fn check_expect_keys(test: &LitmusTest, models: &[Model]) -> Result<(), CliError> {
    for key in test.expectations.iter().flat_map(|e| e.keys()) {
        if builtin(key).is_none() && !models.iter().any(|m| m.answers_to(key)) {
            return Err(CliError::UnknownExpectModel {
                test: test.name.clone(),
                name: key.clone(),
            });
        }
    }
    Ok(())
}

pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    config.validate()?;
    let models = config
        .models
        .iter()
        .map(|m| Model::resolve(m))
        .collect::<Result<Vec<_>, _>>()?;
    if config.engine == EngineChoice::Operational {
        if let Some(m) = models.iter().find(|m| m.operational.is_none()) {
            return Err(CliError::Usage(format!(
                "model {} has no operational semantics",
                m.name
            )));
        }
    }
    let tests = load_tests(&config.paths)?;
    if config.check_expect {
        for t in &tests {
            check_expect_keys(t, &models)?;
        }
    }

    let jobs: Vec<(&LitmusTest, &Model)> = tests.iter().flat_map(|t| models.iter().map(move |m| (t, m))).collect();
    let rows: Vec<Vec<Row>> = jobs
        .par_iter()
        .map(|&(test, model)| {
            let expected = config
                .expect
                .or_else(|| config.check_expect.then(|| recorded(test, model)).flatten());
            let mut verdicts = Vec::new();
            if config.engine.runs(Engine::Axiomatic) {
                verdicts.push(reachable_axiomatic(test, &model.axiomatic));
            }
            if let (true, Some(sem)) = (config.engine.runs(Engine::Operational), model.operational) {
                verdicts.push(reachable_operational(test, sem));
            }
            let agree = (verdicts.len() == 2).then(|| {
                verdicts[0].reachable == verdicts[1].reachable && verdicts[0].final_states == verdicts[1].final_states
            });
            verdicts
                .into_iter()
                .map(|v| Row::new(test, &model.name, v, expected, agree))
                .collect()
        })
        .collect();
    Ok(Report {
        rows: rows.into_iter().flatten().collect(),
    })
}
