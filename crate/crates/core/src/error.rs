use thiserror::Error;

/// Errors produced by the model, propagator, optimizer and experiment layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid control grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite state at t = {time} (step {step}): {state:?}")]
    NonFinite { time: f64, step: usize, state: [f64; 4] },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn grid(msg: impl Into<String>) -> Self {
        Error::InvalidGrid(msg.into())
    }

    /// True when the error comes from the numerics rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
