use thiserror::Error;

/// Errors raised by expansion construction, evaluation and certification.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A size, index or block number exceeds what can be represented or was built.
    #[error("range error: {0}")]
    Range(String),

    /// A constructive procedure could not produce its object.
    #[error("construction failed: {0}")]
    Infeasible(String),

    /// A serialized document is malformed or of an unsupported version.
    #[error("invalid document: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
