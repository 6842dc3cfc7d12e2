use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use marginalia_core::document::DocumentError;
use marginalia_core::engine::EngineError;
use marginalia_core::prompts::PromptError;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("session not found")]
    SessionNotFound,
    #[error("document is {size} bytes, the limit is {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("document changed; current version is {current_version}")]
    VersionConflict { current_version: u64 },
    #[error("document is empty")]
    EmptyDocument,
    #[error(transparent)]
    Document(#[from] DocumentError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("{0}")]
    BadRequest(String),
}

impl From<EngineError> for ApiError {
    fn from(err: EngineError) -> Self {
        match err {
            EngineError::Document(DocumentError::Empty) => ApiError::EmptyDocument,
            EngineError::Document(e) => ApiError::Document(e),
            EngineError::Prompt(e) => ApiError::Prompt(e),
            EngineError::InvalidScope => ApiError::BadRequest(err.to_string()),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub current_version: Option<u64>,
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::SessionNotFound => StatusCode::NOT_FOUND,
            ApiError::TooLarge { .. } => StatusCode::PAYLOAD_TOO_LARGE,
            ApiError::VersionConflict { .. } | ApiError::EmptyDocument => StatusCode::CONFLICT,
            ApiError::Document(DocumentError::Empty) => StatusCode::CONFLICT,
            ApiError::Document(DocumentError::OffsetOutOfRange { .. }) => StatusCode::BAD_REQUEST,
            ApiError::Prompt(PromptError::NotFound(_)) => StatusCode::NOT_FOUND,
            ApiError::Prompt(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ApiError::SessionNotFound => "session_not_found",
            ApiError::TooLarge { .. } => "document_too_large",
            ApiError::VersionConflict { .. } => "version_conflict",
            ApiError::EmptyDocument | ApiError::Document(DocumentError::Empty) => "empty_document",
            ApiError::Document(DocumentError::OffsetOutOfRange { .. }) => "offset_out_of_range",
            ApiError::Prompt(PromptError::NotFound(_)) => "prompt_not_found",
            ApiError::Prompt(_) => "invalid_prompt",
            ApiError::BadRequest(_) => "bad_request",
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody {
            error: self.code(),
            message: self.to_string(),
            current_version: match self {
                ApiError::VersionConflict { current_version } => Some(*current_version),
                _ => None,
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.body())).into_response()
    }
}
