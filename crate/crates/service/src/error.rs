use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use paretoplan_core::Error;
use serde_json::json;

/// Error response: a status code and a JSON `{"error": reason}` body.
#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, message)
    }

    pub fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }

    pub fn too_large(message: impl Into<String>) -> Self {
        Self::new(StatusCode::PAYLOAD_TOO_LARGE, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Pgm(_)
            | Error::InvalidGrid(_)
            | Error::InvalidGraph(_)
            | Error::UnknownNode(_)
            | Error::NonPositiveWeight { .. }
            | Error::InvalidThreat(_)
            | Error::InvalidCostModel(_)
            | Error::InvalidBudget(_)
            | Error::Config(_)
            | Error::Json { .. } => StatusCode::BAD_REQUEST,
            Error::InCollision { .. }
            | Error::SingularThreat { .. }
            | Error::SamplingExhausted { .. }
            | Error::Unreachable(_)
            | Error::NothingReachable
            | Error::LevelOverflow { .. }
            | Error::TableTooLarge { .. }
            | Error::InfiniteEntry { .. }
            | Error::LabelCapExceeded(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Error::DeadlineExceeded => StatusCode::SERVICE_UNAVAILABLE,
            Error::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}
