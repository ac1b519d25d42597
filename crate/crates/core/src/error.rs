use std::path::PathBuf;

use thiserror::Error;

use crate::linprog::LpStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("instance too large: {size} exceeds limit {limit}")]
    TooLarge { size: u128, limit: u128 },

    #[error("element {element} is already labelled in the assignment")]
    ElementInSupport { element: usize },

    #[error("function value {value} at {at} lies outside [0, 1]")]
    RangeViolation { value: f64, at: String },

    #[error("negative feedback {value} for element {element}, label {label} in monotone mode")]
    MonotoneViolation {
        element: usize,
        label: usize,
        value: f64,
    },

    #[error("linear program not solved to optimality: {0:?}")]
    Lp(LpStatus),

    #[error("halfspace oracle failed: achieved max {achieved:e} exceeds tolerance")]
    OracleFailure { achieved: f64 },

    #[error("protocol violation: {0}")]
    Protocol(&'static str),

    #[error("rejection sampling exhausted {attempts} attempts")]
    SamplingBudget { attempts: usize },

    #[error("function is not submodular")]
    NotSubmodular,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(expected: impl ToString, got: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
