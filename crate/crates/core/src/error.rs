use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate weight row {row}: all entries are zero")]
    DegenerateWeightRow { row: usize },

    #[error("non-finite value in {what}")]
    NonFinite { what: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("design matrix is rank deficient at column {column}")]
    RankDeficient { column: usize },

    #[error("matrix is not positive definite (failed at pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    NoConvergence { iterations: usize, last_change: f64 },

    #[error("complete or quasi-complete separation detected at iteration {iteration}")]
    Separation { iteration: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("ratio-form confidence set requires n > 2 log(2/alpha) = {bound:.3}, got n = {n}")]
    RatioCondition { n: usize, bound: f64 },

    #[error("support too large for enumeration: {points} points (limit {limit})")]
    SupportTooLarge { points: usize, limit: usize },

    #[error("inconsistent dependency summary: {0}")]
    InconsistentSummary(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("design column '{name}' is collinear with earlier columns")]
    CollinearColumn { name: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
