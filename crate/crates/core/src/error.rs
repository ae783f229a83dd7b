use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("not invertible at precision")]
    NotInvertible,
    #[error("operands belong to different rings")]
    RingMismatch,
    #[error("not a unit in represented ring: {0}")]
    NotAUnit(String),
    #[error("norm not certified at this s: {0}")]
    NotCertified(String),
    #[error("window underflow: {0}")]
    WindowUnderflow(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("factorization diverged: {0}")]
    Diverged(String),
    #[error("inconsistent reduction: {0}")]
    InconsistentReduction(String),
    #[error("no solution up to degree {bound}: {detail}")]
    NoSolution { bound: usize, detail: String },
    #[error("not unit-root: {0}")]
    NotUnitRoot(String),
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("document error: {0}")]
    Document(String),
}

pub type Result<T> = std::result::Result<T, Error>;
