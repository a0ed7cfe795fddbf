use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: left shape {left:?}, right shape {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("softmax over empty support: every position is masked")]
    EmptySupport,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("parameter {name} has no gradient: backward pass incomplete")]
    MissingGradient { name: String },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    #[error("user {user_id} has no valid tweets")]
    EmptyProfile { user_id: String },

    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    TokenOutOfRange { id: usize, vocab_size: usize },

    #[error("model `{0}` does not expose attention weights")]
    NoAttention(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("featurizer used before fitting")]
    Unfitted,

    #[error("malformed record: {0}")]
    Malformed(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
