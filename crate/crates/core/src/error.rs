use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length mismatch: expected {expected} {what}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("relations must be sorted by non-decreasing cardinality (index {0} breaks the order)")]
    Unsorted(usize),

    #[error("plan leaves {0:?} do not form a contiguous range of the chain")]
    NonContiguous(Vec<usize>),

    #[error("plan references unknown relation {0}")]
    UnknownRelation(usize),

    #[error("cannot parse plan {input:?}: {reason}")]
    PlanSyntax { input: String, reason: String },

    #[error("correlation is undefined: {0}")]
    Undefined(&'static str),

    #[error("missing benchmark result for {0}")]
    MissingPattern(&'static str),

    #[error("benchmark failed: {0}")]
    Benchmark(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
