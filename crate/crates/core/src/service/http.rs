use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tower_http::services::ServeDir;

use super::{AnnotationService, ServiceError};

const PLACEHOLDER: &str = "<!doctype html><title>rcw annotate</title>\
<p>Annotation API is running. Build the UI bundle and pass <code>--ui-dir</code> to serve it here.</p>";

/// A service error rendered as `{"error": code, "message": text}` with a
/// matching status code.
pub struct ApiError(pub ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::IndexOutOfRange { .. } | ServiceError::UnknownLabel(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ServiceError::QueueEmpty
            | ServiceError::SessionNotActive(_)
            | ServiceError::LeaseExpired { .. }
            | ServiceError::IncompleteAnnotation(_)
            | ServiceError::AlreadyExported { .. } => StatusCode::CONFLICT,
            ServiceError::BadInput { .. } | ServiceError::Corpus(_) | ServiceError::Io { .. } => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        let mut body = json!({ "error": self.0.code(), "message": self.0.to_string() });
        if let ServiceError::IncompleteAnnotation(ix) = &self.0 {
            body["unlabeled"] = json!(ix);
        }
        (status, Json(body)).into_response()
    }
}

type Shared = Arc<AnnotationService>;

#[derive(Deserialize)]
struct StartBody {
    annotator_id: String,
}

#[derive(Deserialize)]
struct LabelBody {
    index: usize,
    label: String,
}

async fn start(State(svc): State<Shared>, Json(body): Json<StartBody>) -> Result<Response, ApiError> {
    Ok(Json(svc.start_session(&body.annotator_id)?).into_response())
}

async fn label(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Json(body): Json<LabelBody>,
) -> Result<Response, ApiError> {
    svc.submit_label(&id, body.index, &body.label)?;
    Ok(Json(json!({ "ok": true })).into_response())
}

async fn complete(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(svc.complete_resume(&id)?).into_response())
}

async fn session(State(svc): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(svc.session(&id)?).into_response())
}

async fn progress(State(svc): State<Shared>) -> Response {
    Json(svc.progress()).into_response()
}

/// The JSON API under `/api`, with the UI bundle (or a placeholder page)
/// served from `/`.
pub fn router(svc: Shared, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/sessions", post(start))
        .route("/api/sessions/{id}", get(session))
        .route("/api/sessions/{id}/labels", post(label))
        .route("/api/sessions/{id}/complete", post(complete))
        .route("/api/progress", get(progress))
        .with_state(svc);
    match ui_dir {
        Some(dir) if dir.is_dir() => api.fallback_service(ServeDir::new(dir)),
        _ => api.route("/", get(|| async { Html(PLACEHOLDER) })),
    }
}

/// Serves until ctrl-c.
pub async fn serve(svc: Shared, addr: SocketAddr, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(svc, ui_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
