//! HTTP service over a read-only bundle.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use oobn_lab_core::stateless::ModelBundle;
use oobn_lab_core::Error;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::report::{self, bundle_hash, render, Diagnostic, InferRequest, Precision, ScenarioRequest, SensitivityRequest};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub bind: String,
    pub port: u16,
    pub bundle_path: std::path::PathBuf,
    pub read_only: bool,
    pub precision: Precision,
}

impl ServiceConfig {
    pub fn address(&self) -> Result<SocketAddr, String> {
        if self.port == 0 {
            return Err("port must be in 1..=65535".into());
        }
        format!("{}:{}", self.bind, self.port)
            .parse()
            .map_err(|e| format!("bad bind address `{}`: {e}", self.bind))
    }
}

struct AppState {
    bundle: ModelBundle,
    hash: String,
    precision: Precision,
}

pub fn router(bundle: ModelBundle, precision: Precision) -> Router {
    let hash = bundle_hash(&bundle);
    let state = Arc::new(AppState { bundle, hash, precision });
    Router::new()
        .route("/health", get(health))
        .route("/model", get(model))
        .route("/infer", post(infer))
        .route("/scenario", post(scenario))
        .route("/sensitivity", post(sensitivity))
        .with_state(state)
}

pub fn status_of(error: &Error) -> StatusCode {
    match error {
        Error::UnknownPreset(_) | Error::UnknownVariable(_) | Error::UnknownTemplateReference(_) => {
            StatusCode::NOT_FOUND
        }
        Error::ZeroProbabilityEvidence => StatusCode::UNPROCESSABLE_ENTITY,
        _ => StatusCode::BAD_REQUEST,
    }
}

fn json(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn failure(status: StatusCode, d: Diagnostic) -> Response {
    json(status, format!("{}\n", d.line()))
}

fn parse<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T, Response> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body)
        .map_err(|e| failure(StatusCode::BAD_REQUEST, Diagnostic::new("MalformedRequest", e.to_string())))
}

fn respond<T: Serialize>(state: &AppState, result: oobn_lab_core::Result<T>) -> Response {
    match result {
        Ok(body) => json(StatusCode::OK, render(&body, state.precision)),
        Err(e) => failure(status_of(&e), Diagnostic::from(&e)),
    }
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    json(
        StatusCode::OK,
        render(&serde_json::json!({"status": "ok", "model_hash": state.hash}), state.precision),
    )
}

async fn model(State(state): State<Arc<AppState>>) -> Response {
    json(StatusCode::OK, render(&report::model_summary(&state.bundle, &state.hash), state.precision))
}

async fn infer(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    match parse::<InferRequest>(&body) {
        Ok(request) => respond(&state, report::infer(&state.bundle, &state.hash, &request)),
        Err(r) => r,
    }
}

async fn scenario(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    match parse::<ScenarioRequest>(&body) {
        Ok(request) => respond(&state, report::scenario(&state.bundle, &request)),
        Err(r) => r,
    }
}

async fn sensitivity(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let request: SensitivityRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return failure(StatusCode::BAD_REQUEST, Diagnostic::new("MalformedRequest", e.to_string())),
    };
    let bundle = state.clone();
    let result = tokio::task::spawn_blocking(move || report::sensitivity(&bundle.bundle, &request))
        .await
        .unwrap_or_else(|e| Err(Error::Io(e.to_string())));
    respond(&state, result)
}

pub async fn serve(config: ServiceConfig) -> Result<(), String> {
    let address = config.address()?;
    let bundle = ModelBundle::load(&config.bundle_path).map_err(|e| Diagnostic::from(&e).line())?;
    let listener = tokio::net::TcpListener::bind(address).await.map_err(|e| e.to_string())?;
    eprintln!("serving {} on http://{address}", config.bundle_path.display());
    axum::serve(listener, router(bundle, config.precision))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| e.to_string())
}
