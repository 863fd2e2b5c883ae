use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the beam-training library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("scene cannot hold any vehicle: {0}")]
    SceneTooSmall(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    Dimension {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("row {row} has non-positive maximum rate {max}")]
    NonPositiveMax { row: usize, max: f64 },

    #[error("not enough rows: need at least {needed}, have {have}")]
    TooFewRows { needed: usize, have: usize },

    #[error("parameter budget {budget} cannot hold {needed} base predictions")]
    BudgetTooSmall { budget: usize, needed: usize },

    #[error("requested {requested} clusters but only {distinct} distinct locations")]
    TooManyClusters { requested: usize, distinct: usize },

    #[error("empty cluster {0}")]
    EmptyCluster(usize),

    #[error("malformed file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("cannot read {path}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn malformed(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Malformed {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
