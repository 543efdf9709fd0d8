use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("geometry unavailable: cell {cell} has no position; supply an explicit edge list")]
    GeometryUnavailable { cell: usize },

    #[error("invalid cell id {0}")]
    InvalidCell(usize),

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} exceeds budget of {limit}")]
    BudgetExceeded { what: String, limit: u64 },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        tail: Vec<f64>,
    },

    #[error("utility {0} outside [0, 1]")]
    UtilityOutOfRange(f64),

    #[error("simulation stalled: zero total rate in state {0:?}")]
    ZeroRate(Vec<usize>),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, ModelError>;
