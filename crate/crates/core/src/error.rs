//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TsError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("time {0} is not a grid point")]
    OffGrid(f64),
    #[error("paths are defined on different grids")]
    GridMismatch,
    #[error("model outside the tractable class: {0}")]
    Untractable(String),
    #[error("no admissible compensator: {0}")]
    Inconsistent(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("scenario schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, TsError>;

impl TsError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        TsError::Invalid(msg.into())
    }
}
