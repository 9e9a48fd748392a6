use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    Shape {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    Dimension {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not positive definite: pivot {pivot} is {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("singular triangular system: zero diagonal at index {0}")]
    Singular(usize),

    #[error("matrix is not symmetric: max asymmetry {0:e}")]
    NotSymmetric(f64),

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("saddle-point oracle failed: {0}")]
    OracleFailure(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid problem spec: {0}")]
    Spec(String),

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("rank deficiency: {0}")]
    Rank(String),

    #[error("ergodic weight must be positive, got {0}")]
    Weight(f64),

    #[error("insufficient data for rate fit: {usable} usable points, need at least 5")]
    InsufficientData { usable: usize },

    #[error("{count} condition check violation(s); first: {first}")]
    CheckViolation { count: usize, first: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Spec(_)
            | Error::Schedule(_)
            | Error::Unsupported(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::InsufficientData { .. } => 2,
            Error::CheckViolation { .. } => 3,
            _ => 4,
        }
    }
}
