use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("word `{word}` has weight {weight} > 1")]
    WeightTooLarge { word: String, weight: f64 },

    #[error("word `{0}` is not a generator")]
    NotAGenerator(String),

    #[error("cannot parse word literal `{literal}`: {reason}")]
    BadWordLiteral { literal: String, reason: String },

    #[error("time {time} is not aligned to the mesh {mesh}")]
    Misaligned { time: f64, mesh: f64 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("unsupported dimension: {0}")]
    Unsupported(String),

    #[error("non-finite loss at parameters {params:?}")]
    NonFiniteLoss { params: Vec<f64> },

    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("toml: {0}")]
    Toml(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Toml(e.to_string())
    }
}

impl From<toml::ser::Error> for Error {
    fn from(e: toml::ser::Error) -> Self {
        Error::Toml(e.to_string())
    }
}
