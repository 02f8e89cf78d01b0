use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use levelset_core::EngineError;
use serde_json::{json, Value};

/// An error response: `{"error": code, "message": ..., ...extra}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub extra: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            extra: Value::Null,
        }
    }

    pub fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id}"))
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "protocol", message)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn with(mut self, extra: Value) -> Self {
        self.extra = extra;
        self
    }

    pub fn engine(err: EngineError, iter: usize) -> Self {
        match err {
            EngineError::Instability { iteration, x, y } => Self::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "instability",
                err.to_string(),
            )
            .with(json!({ "iteration": iteration, "x": x, "y": y, "iter": iter })),
            other => Self::bad_request(other.to_string()).with(json!({ "iter": iter })),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.code, "message": self.message });
        if let (Value::Object(extra), Some(map)) = (self.extra, body.as_object_mut()) {
            map.extend(extra);
        }
        (self.status, Json(body)).into_response()
    }
}
