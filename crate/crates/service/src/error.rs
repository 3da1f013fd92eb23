use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::API_SCHEMA;

/// Undo or redo.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Undo,
    Redo,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ServiceError {
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("{what} {id} not found")]
    NotFound { what: &'static str, id: String },
    #[error("snapshot version {got} rejected, expected {expected}")]
    VersionConflict { expected: u64, got: u64 },
    #[error("invalid: {}", violations.join("; "))]
    Validation { violations: Vec<String> },
    #[error("no workspace change since the active report")]
    NothingToRefine,
    #[error("job {job_id} is still running")]
    Busy { job_id: String },
    #[error("cannot {direction:?} any further")]
    AtBoundary { direction: Direction },
    #[error("a report already exists; trigger a refinement instead")]
    ReportExists,
    #[error("no report yet; trigger a generation first")]
    NoReport,
    #[error("{stage} failed: {cause}")]
    Pipeline { stage: String, cause: String },
    #[error("storage: {0}")]
    Storage(String),
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::NotFound { .. } => "not_found",
            ServiceError::VersionConflict { .. } => "version_conflict",
            ServiceError::Validation { .. } => "validation_error",
            ServiceError::NothingToRefine => "nothing_to_refine",
            ServiceError::Busy { .. } => "busy",
            ServiceError::AtBoundary { .. } => "at_boundary",
            ServiceError::ReportExists => "report_exists",
            ServiceError::NoReport => "no_report",
            ServiceError::Pipeline { .. } => "pipeline_error",
            ServiceError::Storage(_) => "storage_error",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::NotFound { .. } => StatusCode::NOT_FOUND,
            ServiceError::Validation { .. } | ServiceError::Pipeline { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::CONFLICT,
        }
    }

    fn details(&self) -> serde_json::Value {
        match self {
            ServiceError::VersionConflict { expected, got } => json!({ "expected": expected, "got": got }),
            ServiceError::Validation { violations } => json!({ "violations": violations }),
            ServiceError::Busy { job_id } => json!({ "job_id": job_id }),
            ServiceError::AtBoundary { direction } => json!({ "direction": direction }),
            ServiceError::Pipeline { stage, cause } => json!({ "stage": stage, "cause": cause }),
            _ => serde_json::Value::Null,
        }
    }

    pub(crate) fn storage(e: impl std::fmt::Display) -> Self {
        ServiceError::Storage(e.to_string())
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = json!({
            "api_schema": API_SCHEMA,
            "error": self.code(),
            "message": self.to_string(),
            "details": self.details(),
        });
        (self.status(), Json(body)).into_response()
    }
}
