//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("flux bias {got} does not dominate the schedule scale (need > {required})")]
    FluxBiasTooSmall { required: f64, got: f64 },

    #[error("frequency f{} is zero; the log-ratio estimator is undefined", index + 1)]
    ZeroFrequency { index: usize },

    #[error("non-identifiable data: {0}")]
    NonIdentifiable(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
