use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("non-universal distance set: {0}")]
    NotUniversal(String),
    #[error("no admissible completion: {0}")]
    NoCompletion(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("relation is not transitive at r = {r}: δ({a},{b}) ≤ r, δ({b},{c}) ≤ r, δ({a},{c}) > r")]
    NotTransitive { r: String, a: usize, b: usize, c: usize },
    #[error("invariant violated: {0}")]
    Internal(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
