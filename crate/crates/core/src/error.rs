use thiserror::Error;

/// Errors raised by the optimization engine and its building blocks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KrotovError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("space mismatch: {0}")]
    SpaceMismatch(String),

    #[error("missing value for control {index} (only {available} supplied)")]
    MissingControl { index: usize, available: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("matrix exponential failed: {0}")]
    ExpmFailed(String),

    #[error("ODE integration step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid update shape: {0}")]
    InvalidShape(String),

    #[error("invalid pulse options: {0}")]
    InvalidPulseOptions(String),

    #[error("invalid objectives: {0}")]
    InvalidObjectives(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("corrupted update: S = 0 on interval {interval} but Δε = {delta:e}")]
    CorruptedUpdate { interval: usize, delta: f64 },

    #[error("numerical estimate of A undefined: no change in the final states")]
    UndefinedA,

    #[error("lambda_a lower bound undefined: guess control is identically zero")]
    ZeroGuess,

    #[error("singular matrix in linear solve")]
    Singular,
}

pub type Result<T> = std::result::Result<T, KrotovError>;
