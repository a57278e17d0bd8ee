//! Stateless HTTP scoring service.
//!
//! | route | body | reply |
//! |---|---|---|
//! | `POST /v1/score` | `ScoreRequest` or an array of them | `ScoreResponse` or an array in request order |
//! | `POST /v1/descriptor` | `{object_name?, samples, config?}` | `{dir, speed, scale}` |
//! | `GET /healthz` | | `{status, version, config_digest}` |
//!
//! Schema violations get a 400 whose body names the offending field path;
//! a batch larger than the configured cap gets a 413. Malformed predictions
//! are not errors: they score zero on the affected components.

use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use stt_core::record::from_json_value;
use stt_core::service::{describe_track, parse_score_body, DescriptorRequest, ScoreBody};
use stt_core::{score_request, RewardConfig, SchemaError, ScoreResponse};
use tokio::net::TcpListener;

use crate::config::config_digest;

const BODY_LIMIT: usize = 256 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct AppState {
    pub reward: RewardConfig,
    pub batch_cap: usize,
    digest: String,
}

impl AppState {
    pub fn new(reward: RewardConfig, batch_cap: usize) -> Self {
        Self {
            digest: config_digest(&reward),
            reward,
            batch_cap,
        }
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/score", post(score))
        .route("/v1/descriptor", post(descriptor))
        .route("/healthz", get(health))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(Arc::new(state))
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

fn json_response<T: Serialize>(status: StatusCode, body: &T) -> Response {
    match serde_json::to_vec(body) {
        Ok(bytes) => (status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

fn error_response(status: StatusCode, kind: &str, path: Option<&str>, message: &str) -> Response {
    let mut error = json!({"kind": kind, "message": message});
    if let Some(p) = path {
        error["path"] = json!(p);
    }
    json_response(status, &json!({ "error": error }))
}

fn schema_error(e: &SchemaError) -> Response {
    error_response(StatusCode::BAD_REQUEST, "SchemaError", Some(&e.path), &e.message)
}

#[allow(clippy::result_large_err)]
fn parse_json(body: &[u8]) -> Result<Value, Response> {
    serde_json::from_slice(body)
        .map_err(|e| error_response(StatusCode::BAD_REQUEST, "InvalidJson", Some(""), &e.to_string()))
}

enum Scored {
    One(ScoreResponse),
    Many(Vec<ScoreResponse>),
}

fn evaluate(body: ScoreBody, cfg: &RewardConfig) -> Result<Scored, SchemaError> {
    match body {
        ScoreBody::Single(req) => score_request(&req, cfg).map(Scored::One),
        ScoreBody::Batch(reqs) => {
            // resolve overrides up front so the reported error is the first one
            for (i, r) in reqs.iter().enumerate() {
                r.effective_config(cfg).map_err(|e| e.within(&format!("[{i}]")))?;
            }
            let out = reqs
                .par_iter()
                .map(|r| score_request(r, cfg))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Scored::Many(out))
        }
    }
}

async fn score(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let value = match parse_json(&body) {
        Ok(v) => v,
        Err(r) => return r,
    };
    if let Value::Array(items) = &value {
        if items.len() > state.batch_cap {
            let msg = format!("batch of {} exceeds the cap of {}", items.len(), state.batch_cap);
            return error_response(StatusCode::PAYLOAD_TOO_LARGE, "BatchTooLarge", None, &msg);
        }
    }
    let worker = Arc::clone(&state);
    let joined = tokio::task::spawn_blocking(move || {
        let parsed = parse_score_body(value)?;
        evaluate(parsed, &worker.reward)
    })
    .await;
    match joined {
        Ok(Ok(Scored::One(r))) => json_response(StatusCode::OK, &r),
        Ok(Ok(Scored::Many(r))) => json_response(StatusCode::OK, &r),
        Ok(Err(e)) => schema_error(&e),
        Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, "Internal", None, &e.to_string()),
    }
}

async fn descriptor(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let value = match parse_json(&body) {
        Ok(v) => v,
        Err(r) => return r,
    };
    let request: DescriptorRequest = match from_json_value(value) {
        Ok(r) => r,
        Err(e) => return schema_error(&e),
    };
    match describe_track(&request, &state.reward.motion_config) {
        Ok(d) => json_response(StatusCode::OK, &d),
        Err(e) => error_response(StatusCode::BAD_REQUEST, e.kind(), None, &e.to_string()),
    }
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    json_response(
        StatusCode::OK,
        &json!({
            "status": "ok",
            "version": env!("CARGO_PKG_VERSION"),
            "config_digest": state.digest,
        }),
    )
}
