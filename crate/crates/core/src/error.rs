use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("edge list contains no nodes")]
    EmptyGraph,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("iteration did not converge after {steps} steps (last residual {residual:e})")]
    NonConvergence { steps: usize, residual: f64 },

    #[error("model series does not converge: beta = {beta}")]
    NonConvergentModel { beta: f64 },

    #[error("linear solve failed (condition estimate {condition:e})")]
    Solve { condition: f64 },

    #[error("{count} candidate control sets exceed the enumeration limit of {limit}; use the closed-form selection instead")]
    EnumerationLimit { count: u128, limit: u128 },

    #[error("alpha learning failed: {0}")]
    Learning(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence { .. } | Error::NonConvergentModel { .. } | Error::Learning(_) => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}
