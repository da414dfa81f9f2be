use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("cover has no active cells")]
    EmptyCover,
    #[error("unknown graph vertex {0}")]
    UnknownVertex(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("oracle did not reach a fixed point within {0} iterations")]
    NoFixedPoint(usize),
    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),
    #[error("malformed cover csv at line {line}: {reason}")]
    CoverCsv { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
