use argdialog::dialogue::DialogueError;
use argdialog::eval::EvalError;
use argdialog::ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no session with id {0:?}")]
    SessionNotFound(String),
    #[error("no argument graph for topic {0:?}")]
    UnknownTopic(String),
    #[error("no intent and similarity models are loaded")]
    ModelNotLoaded,
    #[error("predicted label {0:?} is not a dialogue move")]
    UnknownIntent(String),
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("replay of session {id:?} diverged: {reason}")]
    ReplayMismatch { id: String, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("storage: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type ServiceResult<T> = Result<T, ServiceError>;

impl ServiceError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::SessionNotFound(_) => "session_not_found",
            ServiceError::UnknownTopic(_) => "unknown_topic",
            ServiceError::ModelNotLoaded => "model_not_loaded",
            ServiceError::UnknownIntent(_) => "unknown_intent",
            ServiceError::Dialogue(e) => e.code(),
            ServiceError::Model(ModelError::NoCandidates) => "no_candidates",
            ServiceError::Model(_) => "model_error",
            ServiceError::Eval(_) => "eval_error",
            ServiceError::ReplayMismatch { .. } => "replay_mismatch",
            ServiceError::Config(_) => "invalid_config",
            ServiceError::BadRequest(_) => "invalid_request",
            ServiceError::Io(_) | ServiceError::Json(_) => "storage_error",
        }
    }

    /// HTTP status for the error.
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::SessionNotFound(_) | ServiceError::UnknownTopic(_) => 404,
            ServiceError::ModelNotLoaded => 503,
            ServiceError::BadRequest(_) | ServiceError::Config(_) => 400,
            ServiceError::UnknownIntent(_) => 422,
            ServiceError::Model(ModelError::NoCandidates) => 409,
            ServiceError::Dialogue(e) => match e {
                DialogueError::UnknownReference(_)
                | DialogueError::MissingArgument(_)
                | DialogueError::UnexpectedArgument(_)
                | DialogueError::UnknownMove(_) => 422,
                DialogueError::AtRoot | DialogueError::NoChildren(_) | DialogueError::Terminated => 409,
                _ => 400,
            },
            _ => 500,
        }
    }
}
