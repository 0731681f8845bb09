use thiserror::Error;

/// Errors raised by the construction and verification pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Tail truncation too shallow to cover the root square.
    #[error("tail truncation too shallow: need p_max >= {required}")]
    Truncation { required: u32 },

    /// The plane cover does not reach the support of the input.
    #[error("plane cover truncated: need k_max >= {required}")]
    CoverTruncation { required: u32 },

    #[error("family exceeds the cell budget of {budget} cells")]
    TooManyCells { budget: usize },

    #[error("quadrature did not reach tolerance {tolerance:e} (achieved {achieved:e})")]
    Accuracy { tolerance: f64, achieved: f64 },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("io: {0}")]
    Io(String),

    #[error("format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
