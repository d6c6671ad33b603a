use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },

    #[error("line {line}: non-finite value in field `{field}`")]
    NonFinite { line: usize, field: &'static str },

    #[error("line {line}: dimension mismatch: {message}")]
    Dimension { line: usize, message: String },

    #[error("line {line}: probability sum {sum} exceeds tolerance")]
    ProbabilitySum { line: usize, sum: f64 },

    #[error("unknown schema version `{0}`")]
    Schema(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The quantity is mathematically undefined for this input (reported as NA downstream).
    #[error("undefined: {0}")]
    Undefined(&'static str),

    #[error("covariance factorization failed after regularization (epsilon {epsilon:e})")]
    Factorization { epsilon: f64 },

    #[error("csv: {0}")]
    Csv(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Short machine-readable kind, used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Malformed { .. } => "malformed",
            Error::NonFinite { .. } => "non_finite",
            Error::Dimension { .. } => "dimension",
            Error::ProbabilitySum { .. } => "probability_sum",
            Error::Schema(_) => "schema",
            Error::InvalidInput(_) => "invalid_input",
            Error::Undefined(_) => "undefined",
            Error::Factorization { .. } => "factorization",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
