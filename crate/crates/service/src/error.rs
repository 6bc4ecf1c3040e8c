use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use slalom_core::SlalomError;

/// Error response: `{"status": <code>, "error": <message>}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    status: u16,
    error: &'a str,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    /// Well-formed request outside the physical or resource domain.
    pub fn domain(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }

    pub fn timeout(limit: Duration) -> Self {
        Self::new(StatusCode::GATEWAY_TIMEOUT, format!("computation exceeded {} ms", limit.as_millis()))
    }
}

impl From<SlalomError> for ApiError {
    fn from(e: SlalomError) -> Self {
        Self::domain(e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { status: self.status.as_u16(), error: &self.message };
        (self.status, Json(body)).into_response()
    }
}
