//! HTTP facade over one model fixed at startup. Handlers share the engine
//! read-only; no state survives a request.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cryptodbn::dbn::DbnError;
use cryptodbn::whatif::{WhatIfEngine, WhatIfRequest};
use serde::Serialize;
use tower_http::services::ServeDir;

use crate::commands::load_model;
use crate::CliError;

/// Served at `/` when no asset directory is given.
pub const PLACEHOLDER_INDEX: &str = include_str!("../assets/index.html");

#[derive(Debug, Serialize)]
pub struct ApiError {
    pub error: String,
    pub message: String,
}

fn error_response(status: StatusCode, code: &str, message: String) -> Response {
    let body = ApiError {
        error: code.to_string(),
        message,
    };
    (status, Json(body)).into_response()
}

fn dbn_error_response(e: DbnError) -> Response {
    let code = match &e {
        DbnError::UnknownVariable(_) => "UnknownVariable",
        DbnError::EvidenceOnQuery(_) => "EvidenceOnQuery",
        DbnError::SliceOutOfRange { .. } => "SliceOutOfRange",
        DbnError::ConflictingEvidence(_) => "ConflictingEvidence",
        DbnError::ZeroProbabilityEvidence => "ZeroProbabilityEvidence",
        _ => return error_response(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()),
    };
    error_response(StatusCode::BAD_REQUEST, code, e.to_string())
}

async fn schema(State(engine): State<Arc<WhatIfEngine>>) -> Response {
    Json(engine.schema().clone()).into_response()
}

async fn whatif(State(engine): State<Arc<WhatIfEngine>>, body: Bytes) -> Response {
    let request: WhatIfRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error_response(StatusCode::UNPROCESSABLE_ENTITY, "MalformedRequest", e.to_string()),
    };
    match engine.query(&request) {
        Ok(response) => Json(response).into_response(),
        Err(e) => dbn_error_response(e),
    }
}

async fn placeholder() -> Html<&'static str> {
    Html(PLACEHOLDER_INDEX)
}

async fn not_found() -> Response {
    error_response(StatusCode::NOT_FOUND, "NotFound", "no such route".into())
}

pub fn router(engine: WhatIfEngine, assets: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/schema", get(schema))
        .route("/api/whatif", post(whatif))
        .route("/api/{*rest}", get(not_found).post(not_found))
        .with_state(Arc::new(engine));
    match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir).append_index_html_on_directories(true)),
        None => api.route("/", get(placeholder)).route(
            "/index.html",
            get(|| async { ([(header::CONTENT_TYPE, "text/html; charset=utf-8")], PLACEHOLDER_INDEX) }),
        ),
    }
}

pub fn serve(model: &Path, host: &str, port: u16, assets: Option<PathBuf>) -> Result<(), CliError> {
    let engine = WhatIfEngine::new(load_model(model)?)?;
    if let Some(dir) = &assets {
        if !dir.is_dir() {
            return Err(CliError::Data(format!("asset directory not found: {}", dir.display())));
        }
    }
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| CliError::Usage(format!("bad address {host}:{port}: {e}")))?;
    let app = router(engine, assets.as_deref());
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Data(format!("runtime: {e}")))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Data(format!("bind {addr}: {e}")))?;
        eprintln!("serving {} on http://{addr}", model.display());
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::Data(format!("server: {e}")))
    })
}
