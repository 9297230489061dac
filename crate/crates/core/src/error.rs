use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OagError {
    #[error("group spec must contain at least one block")]
    EmptySpec,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("spec mismatch: {0}")]
    SpecMismatch(String),
    #[error("invalid block element: {0}")]
    InvalidBlock(String),
    #[error("element is not divisible by {0}")]
    NotDivisible(u64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("parameter a{0} is not bound")]
    UnresolvedParameter(usize),
    #[error("literal cannot be normalized: {0}")]
    NotNormalizable(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, OagError>;
