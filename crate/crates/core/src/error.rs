use thiserror::Error;

/// Errors surfaced by the library and mapped onto CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration violates its documented range.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// The run would exceed the codebook scan budget (or 2^k does not fit).
    #[error("resource refusal: {0}")]
    ResourceRefusal(String),

    /// Vector or matrix dimensions disagree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidSpec(_) | Error::Json(_) | Error::Shape(_) => 2,
            Error::ResourceRefusal(_) => 3,
            Error::InsufficientSamples(_) | Error::Io(_) | Error::Csv(_) => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidSpec(msg.into())
}
