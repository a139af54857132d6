//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("empty batch")]
    EmptyBatch,

    #[error("capacity {beta} selects zero nodes out of {nodes}; a sub-model needs at least one node per layer")]
    CapacityTooSmall { beta: f64, nodes: usize },

    #[error("index {index} out of range for layer with {nodes} nodes")]
    IndexOutOfRange { index: usize, nodes: usize },

    #[error("invalid value for `{field}`: {reason}")]
    InvalidField { field: String, reason: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("config line {line} is not `key = value`: {text}")]
    MalformedLine { line: usize, text: String },

    #[error("cohort size {cohort} exceeds client count {clients}")]
    CohortTooLarge { cohort: usize, clients: usize },

    #[error("empty shard for client {0}")]
    EmptyShard(u64),

    #[error("{0}")]
    Invalid(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidField {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
