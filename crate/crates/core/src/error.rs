use thiserror::Error;

/// Errors produced by the depth-hand pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("depth domain error: {0}")]
    Domain(String),

    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("morphological result is empty: {0}")]
    EmptyResult(String),

    #[error("degenerate hand: {0}")]
    DegenerateHand(String),

    #[error("no valid depth inside finger mask")]
    NoValidDepth,

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn format(offset: usize, message: impl Into<String>) -> Self {
        Error::Format {
            offset,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
