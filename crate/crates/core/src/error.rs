use thiserror::Error;

/// Errors raised by the estimators, the experiment harness and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("non-finite value at sample {row}, coordinate {col}")]
    NonFinite { row: usize, col: usize },

    #[error("k must satisfy 1 <= k < N (k = {k}, N = {n})")]
    InvalidK { k: usize, n: usize },

    #[error("sample index {index} out of range for N = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("duplicate points give a zero neighbor distance at indices {indices:?}; jitter the data before estimating")]
    DuplicatePoints { indices: Vec<usize> },

    #[error("sample count mismatch: x has {x} rows, y has {y}")]
    LengthMismatch { x: usize, y: usize },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("invalid config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("trial {trial} at n = {n} (seed {seed}) failed: {source}")]
    Trial {
        seed: u64,
        n: usize,
        trial: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("regression needs at least 3 usable rows, got {0}")]
    InsufficientRows(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}
