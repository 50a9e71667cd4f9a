use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("quadrature did not converge: estimated error {error:e} after {intervals} intervals")]
    QuadratureNonConvergence { error: f64, intervals: usize },

    #[error("linear system is numerically singular (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("internal solver failure: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
