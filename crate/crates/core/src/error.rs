use thiserror::Error;

/// Errors raised by the geometric kernel, the model constructors and the steppers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("temperature of subsystem {subsystem} is {value:e}, below the positivity floor")]
    Temperature { subsystem: usize, value: f64 },

    #[error("implicit solve did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("unknown {what} `{name}`")]
    Unknown { what: &'static str, name: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension { expected, actual })
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Parameter {
            name,
            reason: format!("must be positive and finite, got {value}"),
        })
    }
}
