use std::fmt;
use std::path::{Path, PathBuf};

use super::{parse_litmus, LitmusError, LitmusTest};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}", ParseFailures(.0))]
    Parse(Vec<(PathBuf, LitmusError)>),
}

struct ParseFailures<'a>(&'a [(PathBuf, LitmusError)]);

impl fmt::Display for ParseFailures<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} corpus file(s) failed to parse", self.0.len())?;
        for (path, err) in self.0 {
            write!(f, "\n  {}: {err}", path.display())?;
        }
        Ok(())
    }
}

/// Parses every `.litmus` file in `dir`, sorted by file name. Any parse
/// failure fails the whole load, listing every offending file.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<LitmusTest>, CorpusError> {
    let dir = dir.as_ref();
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Io { path, source }
    };
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io(dir))? {
        let path = entry.map_err(io(dir))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "litmus") {
            paths.push(path);
        }
    }
    paths.sort();

    let mut tests = Vec::with_capacity(paths.len());
    let mut failures = Vec::new();
    for path in paths {
        let text = std::fs::read_to_string(&path).map_err(io(&path))?;
        match parse_litmus(&text) {
            Ok(t) => tests.push(t),
            Err(e) => failures.push((path, e)),
        }
    }
    if failures.is_empty() {
        Ok(tests)
    } else {
        Err(CorpusError::Parse(failures))
    }
}
