use thiserror::Error;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("variable {index}: {reason}")]
    Bounds { index: usize, reason: String },
    #[error("problem has {0} variables, more than the supported {1}")]
    TooLarge(usize, usize),
    #[error("cardinality cap for variable {0} must be positive")]
    NonPositiveCap(usize),
    #[error("simplex exceeded {0} iterations")]
    IterationLimit(usize),
    #[error("problem file: {0}")]
    Format(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MilpError>;
