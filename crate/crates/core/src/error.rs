use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported qudit dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("invalid subsystem {0} (expected 1, 2 or 3)")]
    InvalidSubsystem(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("tensor product dimension {0} exceeds the 2^20 limit")]
    TooLarge(usize),
    #[error("invalid letter: {0}")]
    InvalidLetter(String),
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("unknown sequence name {0:?}")]
    UnknownSequence(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("search: {0}")]
    Search(String),
    #[error("no rotation maps the surviving terms onto S_z")]
    NoRecoveryRotation,
    #[error("solver result failed verification: {0}")]
    Verification(String),
    #[error(transparent)]
    Milp(#[from] pulseforge_milp::MilpError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
