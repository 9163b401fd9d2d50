use thiserror::Error;

use crate::tensor::TensorError;
use crate::text::TextError;

/// Errors raised by the encoders, the two models and their training loops.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("sequence of {len} tokens exceeds the position table ({max})")]
    SequenceTooLong { len: usize, max: usize },
    #[error("empty input sequence")]
    EmptySequence,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("training data is empty")]
    EmptyDataset,
    #[error("non-finite loss {loss} at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize, loss: f64 },
    #[error("model is frozen; its parameters cannot be modified")]
    Frozen,
    #[error("label {0:?} is not in the intent vocabulary")]
    UnknownLabel(String),
    #[error("candidate list is empty")]
    NoCandidates,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ModelError>;
