use thiserror::Error;

use crate::vorticity::{ClassLabel, Side};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("tau = {0} lies outside the distribution domain")]
    OutsideDomain(f64),

    #[error("s = {s} is below the threshold s0 = {s0}")]
    BelowThreshold { s: f64, s0: f64 },

    #[error("the depth integral diverges at s = s0 (h0 is infinite)")]
    DivergentDepth,

    #[error("vorticity class mismatch: expected {expected}, found {found}")]
    ClassMismatch {
        expected: ClassLabel,
        found: ClassLabel,
    },

    #[error("the distribution is not extended {0}")]
    NotExtended(Side),

    #[error("extension impossible: {0}")]
    Extension(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("root not bracketed: {0}")]
    NoBracket(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("solution left the distribution domain at y = {y} (U = {u}); extend the distribution")]
    LeftDomain { y: f64, u: f64 },

    #[error("invalid wave field: {0}")]
    InvalidField(String),

    #[error("hypothesis not satisfied: {0}")]
    Inapplicable(String),

    #[error("malformed input: {0}")]
    Format(String),
}

impl Error {
    /// True for errors that report a failed hypothesis rather than a
    /// malformed request or a numerical breakdown.
    pub fn is_hypothesis_failure(&self) -> bool {
        matches!(
            self,
            Error::ClassMismatch { .. } | Error::Inapplicable(_) | Error::BelowThreshold { .. }
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Format(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Format(err.to_string())
    }
}
