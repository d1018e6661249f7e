use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KmsError {
    /// Operands live on different phase spaces, backends or variable layouts.
    #[error("context mismatch: {0}")]
    ContextMismatch(String),
    /// Input outside the domain of an operation (non-integrable, non-real, ...).
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("bidifferential order {order} exceeds truncation order {truncation}")]
    TruncationBound { order: usize, truncation: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type KmsResult<T> = Result<T, KmsError>;
