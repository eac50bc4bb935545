use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("isometry kind mismatch: {0}")]
    KindMismatch(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("truncation radius too small: {0}")]
    TruncationError(String),
    #[error("underflow: {0}")]
    Underflow(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
