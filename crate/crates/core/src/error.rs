use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A matrix that must be symmetric positive definite failed its Cholesky factorization.
    #[error("matrix is rank deficient or not positive definite ({context})")]
    RankDeficient { context: String },

    #[error("solver did not converge after {iterations} iterations (last step size {last_step:e})")]
    NonConvergence { iterations: usize, last_step: f64 },

    /// The logistic MLE does not exist: coefficients diverge because the responses are separated.
    #[error("responses are separated by the design; the maximum likelihood estimate diverges")]
    Separation,

    #[error("source payload does not support this operation: {0}")]
    PayloadMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("the discrepancy vector is zero, so the lambda bound is unbounded")]
    ZeroDelta,

    #[error("too many sources for exhaustive enumeration: {0} (limit 10)")]
    TooManySources(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn rank(context: impl Into<String>) -> Self {
        Error::RankDeficient {
            context: context.into(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Stable machine-readable tag, used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::RankDeficient { .. } => "RankDeficient",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::Separation => "Separation",
            Error::PayloadMismatch(_) => "PayloadMismatch",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::Validation(_) => "ValidationError",
            Error::ZeroDelta => "ZeroDelta",
            Error::TooManySources(_) => "TooManySources",
            Error::Parse(_) => "ParseError",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
