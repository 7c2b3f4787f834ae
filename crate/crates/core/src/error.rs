use thiserror::Error;

/// Errors raised by the objectives, solvers and the run harness.
#[derive(Debug, Error)]
pub enum ThomsonError {
    #[error("points {i} and {j} are closer than the distance floor (d = {distance:e})")]
    CoincidentPoints { i: usize, j: usize, distance: f64 },

    #[error("column {index} has (near) zero norm and cannot be projected")]
    ZeroNormColumn { index: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("objective evaluated to a non-finite value ({value}) at evaluation {evaluation}")]
    NonFiniteObjective { evaluation: usize, value: f64 },

    #[error("line search found no acceptable step within {trials} trials (iteration {iteration})")]
    LineSearchFailure { iteration: usize, trials: usize },

    #[error("continuation schedule has no stages")]
    ScheduleEmpty,

    #[error("invalid continuation schedule: {0}")]
    InvalidSchedule(String),

    #[error("index {index} out of range for {n} points")]
    IndexError { index: usize, n: usize },

    #[error("objective diverged at iteration {iteration}: {value:e} exceeds 10x the initial value {initial:e}")]
    DivergenceDetected {
        iteration: usize,
        value: f64,
        initial: f64,
    },

    #[error("at least {required} points are needed, got {got}")]
    TooFewPoints { required: usize, got: usize },

    #[error("invalid options: {0}")]
    InvalidOptions(String),

    #[error("invalid run spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = ThomsonError> = std::result::Result<T, E>;
