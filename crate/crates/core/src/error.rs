use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate Gini denominator: payoff sum must be positive")]
    DegenerateDenominator,

    #[error("iteration {t} outside schedule of {total} iterations")]
    IterationOutOfRange { t: usize, total: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("heterogeneous results: {0}")]
    Heterogeneous(String),

    #[error("trace length {k} exceeds the {available} logged steps")]
    TraceTooLong { k: usize, available: usize },

    #[error("oracle requires a deterministic opponent, got {0}")]
    NonDeterministicOpponent(String),

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
