use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{method} did not converge after {iterations} iterations (last estimate {estimate})")]
    NotConverged {
        method: &'static str,
        iterations: usize,
        estimate: f64,
    },

    #[error("matrix is not symmetric (asymmetry {asymmetry:.3e} exceeds {limit:.3e})")]
    NotSymmetric { asymmetry: f64, limit: f64 },

    #[error("overall convexity is not certified (smallest eigenvalue {min_eigenvalue:.6e})")]
    Uncertified { min_eigenvalue: f64 },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}
