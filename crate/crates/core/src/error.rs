use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The large-detuning QPM approximation was requested outside the regime
    /// where it holds. Carries the value of the validity expression.
    #[error("outside the large-detuning regime: validity {validity:.4} >= {limit}")]
    OutOfRegime { validity: f64, limit: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("numerical failure in sample {index}: {message}")]
    Numerical { index: usize, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Attach a Monte Carlo sample/group index to a numerical failure.
    pub(crate) fn at_index(self, index: usize) -> Self {
        match self {
            Error::Numerical { message, .. } => Error::Numerical { index, message },
            other => other,
        }
    }
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::invalid(format!(
            "{name} must be finite, got {value}"
        )))
    }
}
