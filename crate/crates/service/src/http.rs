//! JSON API over a [`Service`].

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::session::Service;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

/// An HTTP-level failure rendered as `{code, message}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status, body: ErrorBody { code: code.to_owned(), message: message.into() } }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = StatusCode::from_u16(e.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    topic: Option<String>,
}

#[derive(Debug, Deserialize)]
struct UtteranceRequest {
    text: String,
}

#[derive(Serialize)]
struct Created {
    session_id: String,
    state: crate::session::StateView,
}

fn parse_body<T: DeserializeOwned + Default>(body: &Bytes) -> ApiResult<T> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    parse_required(body)
}

fn parse_required<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_json", e.to_string()))
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}", get(state).delete(delete))
        .route("/sessions/{id}/utterance", post(utterance))
        .route("/sessions/{id}/tree", get(tree))
        .route("/sessions/{id}/log", get(log))
        .fallback(not_found)
        .with_state(service)
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

async fn health(State(svc): State<Arc<Service>>) -> Json<serde_json::Value> {
    let p = svc.pipeline();
    Json(serde_json::json!({
        "status": "ok",
        "models_loaded": p.has_models(),
        "topics": p.topics().collect::<Vec<_>>(),
        "default_topic": p.default_topic(),
        "config_hash": p.config_hash(),
    }))
}

async fn create(State(svc): State<Arc<Service>>, body: Bytes) -> ApiResult<(StatusCode, Json<Created>)> {
    let req: CreateRequest = parse_body(&body)?;
    let state = svc.create_session(req.topic.as_deref())?;
    Ok((StatusCode::CREATED, Json(Created { session_id: state.session_id.clone(), state })))
}

async fn list(State(svc): State<Arc<Service>>) -> Json<Vec<crate::session::SessionSummary>> {
    Json(svc.list_sessions())
}

async fn state(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<crate::session::StateView>> {
    Ok(Json(svc.state(&id)?))
}

async fn delete(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    svc.delete_session(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn tree(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<argdialog::dialogue::TreeView>> {
    Ok(Json(svc.tree(&id)?))
}

async fn log(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<Vec<crate::session::Event>>> {
    Ok(Json(svc.log(&id)?))
}

async fn utterance(
    State(svc): State<Arc<Service>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<crate::pipeline::UtteranceReply>> {
    let req: UtteranceRequest = parse_required(&body)?;
    // Model inference is CPU-bound.
    let reply = tokio::task::spawn_blocking(move || svc.utterance(&id, &req.text))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(Json(reply))
}

/// Serves until ctrl-c.
pub async fn serve(service: Arc<Service>, bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
