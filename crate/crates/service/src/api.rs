use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::de::DeserializeOwned;

use sensemap_core::narrative::Report;
use sensemap_core::workspace::{PromptSettings, WorkspaceSnapshot};

use crate::config::ServiceConfig;
use crate::error::{Direction, ServiceError};
use crate::session::JobKind;
use crate::store::{CreateSession, JobView, ReportView, SessionView, SnapshotAccepted, Store};

type Res<T> = Result<Json<T>, ServiceError>;

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(bytes).map_err(|e| ServiceError::BadRequest(format!("invalid JSON body: {e}")))
}

async fn create_session(State(s): State<Arc<Store>>, b: Bytes) -> Result<(StatusCode, Json<SessionView>), ServiceError> {
    let req: CreateSession = body(&b)?;
    Ok((StatusCode::CREATED, Json(s.create_session(req)?)))
}

async fn get_session(State(s): State<Arc<Store>>, Path(id): Path<String>) -> Res<SessionView> {
    s.session(&id).map(Json)
}

async fn put_snapshot(State(s): State<Arc<Store>>, Path(id): Path<String>, b: Bytes) -> Res<SnapshotAccepted> {
    let snapshot: WorkspaceSnapshot = body(&b)?;
    s.save_snapshot(&id, snapshot).map(Json)
}

async fn put_settings(State(s): State<Arc<Store>>, Path(id): Path<String>, b: Bytes) -> Res<SnapshotAccepted> {
    let settings: PromptSettings = body(&b)?;
    s.update_settings(&id, settings).map(Json)
}

async fn trigger(s: Arc<Store>, id: String, kind: JobKind) -> Result<(StatusCode, Json<JobView>), ServiceError> {
    let (view, task) = s.trigger(&id, kind)?;
    tokio::task::spawn_blocking(move || s.run_job(task));
    Ok((StatusCode::ACCEPTED, Json(view)))
}

async fn generate(State(s): State<Arc<Store>>, Path(id): Path<String>) -> Result<(StatusCode, Json<JobView>), ServiceError> {
    trigger(s, id, JobKind::Generate).await
}

async fn refine(State(s): State<Arc<Store>>, Path(id): Path<String>) -> Result<(StatusCode, Json<JobView>), ServiceError> {
    trigger(s, id, JobKind::Refine).await
}

async fn get_job(State(s): State<Arc<Store>>, Path(id): Path<String>) -> Res<JobView> {
    s.job(&id).map(Json)
}

async fn get_report(State(s): State<Arc<Store>>, Path(id): Path<String>) -> Res<ReportView> {
    s.report(&id).map(Json)
}

async fn undo(State(s): State<Arc<Store>>, Path(id): Path<String>) -> Res<ReportView> {
    s.move_cursor(&id, Direction::Undo).map(Json)
}

async fn redo(State(s): State<Arc<Store>>, Path(id): Path<String>) -> Res<ReportView> {
    s.move_cursor(&id, Direction::Redo).map(Json)
}

async fn put_report(State(s): State<Arc<Store>>, Path(id): Path<String>, b: Bytes) -> Res<ReportView> {
    let report: Report = body(&b)?;
    s.edit_report(&id, report).map(Json)
}

async fn not_found(method: axum::http::Method, uri: axum::http::Uri) -> ServiceError {
    ServiceError::NotFound {
        what: "route",
        id: format!("{method} {}", uri.path()),
    }
}

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/snapshot", put(put_snapshot))
        .route("/sessions/{id}/settings", put(put_settings))
        .route("/sessions/{id}/generate", post(generate))
        .route("/sessions/{id}/refine", post(refine))
        .route("/sessions/{id}/report", get(get_report).put(put_report))
        .route("/sessions/{id}/report/undo", post(undo))
        .route("/sessions/{id}/report/redo", post(redo))
        .route("/jobs/{id}", get(get_job))
        .fallback(not_found)
        .with_state(store)
}

/// Opens the store under the configured data directory and serves until the process ends.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let backend = config.backend.build().map_err(|e| ServiceError::BadRequest(e.to_string()))?;
    let store = Arc::new(Store::open(&config.data_dir, backend, config.backend.clone())?);
    let listener = tokio::net::TcpListener::bind(&config.bind).await.map_err(ServiceError::storage)?;
    tracing::info!(bind = %config.bind, data_dir = %config.data_dir.display(), "listening");
    axum::serve(listener, router(store)).await.map_err(ServiceError::storage)
}
