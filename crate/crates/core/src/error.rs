use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("attribute arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("no entry point available")]
    NoEntry,

    #[error("selectivity is undefined on an empty dataset")]
    EmptyDataset,

    #[error("recall is undefined for an empty ground truth")]
    EmptyTruth,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("build error: {0}")]
    Build(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn format(offset: u64, reason: impl Into<String>) -> Self {
        Error::Format {
            offset,
            reason: reason.into(),
        }
    }
}
