use thiserror::Error;

/// Errors raised by model construction, solvers, estimators and the run harness.
#[derive(Debug, Error)]
pub enum IcrlError {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("no feasible deterministic policy; smallest attainable discounted cost is {min_cost}")]
    Infeasible { min_cost: f64 },

    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),

    #[error("iterative solver did not converge after {sweeps} sweeps (residual {residual:e})")]
    NotConverged { sweeps: usize, residual: f64 },

    #[error("expert policy is undefined at dead state {0}")]
    DeadState(usize),

    #[error("generative-model access is disabled for this environment")]
    GenerativeDisabled,

    #[error("layout parse error at line {line}, column {column}: {message}")]
    Layout {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, IcrlError>;
