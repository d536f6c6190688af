use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use cellprobe::inject::InjectError;
use cellprobe::metrics::MetricsError;
use cellprobe::study::StudyError;
use serde_json::json;

/// Error reply: an HTTP status plus a machine-readable code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "conflict", message)
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({}): {}", self.code, self.status.as_u16(), self.message)
    }
}

impl std::error::Error for ApiError {}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

impl From<StudyError> for ApiError {
    fn from(e: StudyError) -> Self {
        let m = e.to_string();
        match e {
            StudyError::NotFound(_) => Self::not_found(m),
            StudyError::Conflict(_) => Self::conflict(m),
            StudyError::AnswerType(_) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "answer_type", m),
            StudyError::EmptyExport => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "empty_export", m),
            StudyError::Validation(_) => Self::validation(m),
        }
    }
}

impl From<InjectError> for ApiError {
    fn from(e: InjectError) -> Self {
        match e {
            InjectError::PriorMismatch(_) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "prior_mismatch", e.to_string())
            }
            InjectError::Validation(_) => Self::validation(e.to_string()),
        }
    }
}

impl From<MetricsError> for ApiError {
    fn from(e: MetricsError) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "undefined_report", e.to_string())
    }
}

impl From<axum::extract::rejection::JsonRejection> for ApiError {
    fn from(e: axum::extract::rejection::JsonRejection) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_body", e.body_text())
    }
}
