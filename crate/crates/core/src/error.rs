use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("binomial coefficient C({top}, {bottom}) overflows 64 bits")]
    Overflow { top: u64, bottom: u64 },

    #[error("axis {axis} out of range for dimension {n}")]
    AxisOutOfRange { axis: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: J^{k1}(R^{n1}) vs J^{k2}(R^{n2})")]
    ShapeMismatch { n1: usize, k1: usize, n2: usize, k2: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("derivative of order {requested} requested but field only supports order {available}")]
    OrderUnavailable { requested: usize, available: usize },

    #[error("operation requires jet order k = 1, got k = {0}")]
    NotHeisenberg(usize),

    #[error("invalid stratum or index: {0}")]
    InvalidIndex(String),

    #[error("point {0:?} is not on the boundary of the unit cube")]
    NotOnBoundary(Vec<f64>),

    #[error("fields are not boundary compatible (max deviation {max_deviation:e})")]
    IncompatiblePair { max_deviation: f64 },

    #[error("integral gap is zero, no certificate can be produced")]
    ZeroGap,

    #[error("optimizer infeasible at budget: best endpoint mismatch {best_mismatch:e}")]
    InfeasibleAtBudget { best_mismatch: f64 },

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, JetError>;

impl From<std::io::Error> for JetError {
    fn from(e: std::io::Error) -> Self {
        JetError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for JetError {
    fn from(e: serde_json::Error) -> Self {
        JetError::Parse(e.to_string())
    }
}
