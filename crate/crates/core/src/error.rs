use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("scenario field `{field}`: {message}")]
    Scenario { field: String, message: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("agent {agent} state lies outside its constraint set (distance {distance:e})")]
    OutsideSet { agent: usize, distance: f64 },

    #[error("point lies outside the constraint set (distance {distance:e})")]
    NotInSet { distance: f64 },

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("non-finite state encountered at step {step}")]
    NonFinite { step: usize },

    #[error(
        "fixed-point iteration did not converge after {iterations} iterations \
         (last update norm {update_norm:e})"
    )]
    NoConvergence {
        iterations: usize,
        update_norm: f64,
        sigma: Vec<f64>,
    },

    #[error("reference equilibrium not verified (VI gap {gap:e})")]
    UnverifiedReference { gap: f64 },

    #[error("trajectory too short: {got} samples, need at least {need}")]
    TrajectoryTooShort { got: usize, need: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed scenario document: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn scenario(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Scenario {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::NoConvergence { .. } | Error::UnverifiedReference { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            got,
        })
    }
}
