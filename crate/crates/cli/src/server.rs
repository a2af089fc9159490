//! HTTP service for annotation campaigns plus the static annotator UI.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use afortiori::annotation::{AnnotationError, AnnotationService, Submission};
use afortiori::corpus::RecordId;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

pub const TOKEN_HEADER: &str = "x-campaign-token";

type Shared = Arc<AnnotationService>;

/// Error body: `{"error": {"kind", "message"}}`.
pub struct ApiError(StatusCode, &'static str, String);

impl From<AnnotationError> for ApiError {
    fn from(e: AnnotationError) -> Self {
        let (status, kind) = match &e {
            AnnotationError::UnknownCampaign(_) => (StatusCode::NOT_FOUND, "unknown_campaign"),
            AnnotationError::UnknownAnnotator(_) => (StatusCode::NOT_FOUND, "unknown_annotator"),
            AnnotationError::UnknownItem(_) => (StatusCode::NOT_FOUND, "unknown_item"),
            AnnotationError::Inapplicable { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "inapplicable"),
            AnnotationError::Invalid(_)
            | AnnotationError::NotInEvaluationSet(_)
            | AnnotationError::MissingResult(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid"),
            AnnotationError::Closed(_) => (StatusCode::CONFLICT, "closed"),
            AnnotationError::Locked(_) => (StatusCode::LOCKED, "locked"),
            AnnotationError::Io { .. } | AnnotationError::Corrupt { .. } => {
                (StatusCode::INTERNAL_SERVER_ERROR, "storage")
            }
        };
        ApiError(status, kind, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "kind": self.1, "message": self.2 } });
        (self.0, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Default, Deserialize)]
pub struct AuthQuery {
    token: Option<String>,
    annotator: Option<String>,
}

fn authorize(svc: &AnnotationService, campaign: &str, headers: &HeaderMap, q: &AuthQuery) -> Result<(), ApiError> {
    let c = svc.campaign(campaign)?;
    let Some(expected) = &c.token else { return Ok(()) };
    let given = headers
        .get(TOKEN_HEADER)
        .and_then(|v| v.to_str().ok())
        .or(q.token.as_deref());
    if given == Some(expected.as_str()) {
        Ok(())
    } else {
        Err(ApiError(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong campaign token".into()))
    }
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn campaigns(State(svc): State<Shared>) -> Json<Vec<String>> {
    Json(svc.campaign_ids())
}

async fn next_task(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<AuthQuery>,
    headers: HeaderMap,
) -> ApiResult<afortiori::annotation::NextTask> {
    authorize(&svc, &id, &headers, &q)?;
    let annotator = q
        .annotator
        .as_deref()
        .ok_or_else(|| ApiError(StatusCode::BAD_REQUEST, "invalid", "annotator query parameter is required".into()))?;
    Ok(Json(svc.next_task(&id, annotator)?))
}

async fn submit(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<AuthQuery>,
    headers: HeaderMap,
    Json(sub): Json<Submission>,
) -> ApiResult<afortiori::annotation::Acknowledgment> {
    authorize(&svc, &id, &headers, &q)?;
    // the store fsyncs each append
    let ack = tokio::task::spawn_blocking(move || svc.submit_judgments(&id, &sub))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, "storage", e.to_string()))??;
    Ok(Json(ack))
}

async fn aggregate(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<AuthQuery>,
    headers: HeaderMap,
) -> ApiResult<afortiori::annotation::CampaignAggregate> {
    authorize(&svc, &id, &headers, &q)?;
    Ok(Json(svc.campaign_aggregate(&id)?))
}

async fn progress(
    State(svc): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<AuthQuery>,
    headers: HeaderMap,
) -> ApiResult<Vec<afortiori::annotation::AnnotatorProgress>> {
    authorize(&svc, &id, &headers, &q)?;
    Ok(Json(svc.progress(&id)?))
}

async fn item(
    State(svc): State<Shared>,
    Path(item): Path<String>,
    Query(q): Query<AuthQuery>,
    headers: HeaderMap,
) -> ApiResult<afortiori::annotation::AnnotationItem> {
    let id = RecordId(item);
    let owner = svc
        .campaign_ids()
        .into_iter()
        .find(|c| svc.campaign(c).is_ok_and(|c| c.item(&id).is_some()))
        .ok_or_else(|| AnnotationError::UnknownItem(id.to_string()))?;
    authorize(&svc, &owner, &headers, &q)?;
    Ok(Json(svc.campaign(&owner)?.item(&id).cloned().expect("owner holds the item")))
}

/// Routes of the annotation API; `static_dir` serves the UI bundle.
pub fn router(svc: Arc<AnnotationService>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/api/campaigns", get(campaigns))
        .route("/api/campaigns/{id}/next", get(next_task))
        .route("/api/campaigns/{id}/judgments", post(submit))
        .route("/api/campaigns/{id}/aggregate", get(aggregate))
        .route("/api/campaigns/{id}/progress", get(progress))
        .route("/api/items/{id}", get(item))
        .with_state(svc);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

/// Binds `addr`, prints the bound address and serves until ctrl-c or
/// SIGTERM. Returns once in-flight requests have finished.
pub async fn serve(app: Router, addr: SocketAddr) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    println!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).with_graceful_shutdown(shutdown_signal()).await
}
