//! Minimal context service: the CLI pipeline behind two POST endpoints.
//!
//! Requests are validated field by field so clients get actionable 400s.
//! The index artifacts load lazily on first use and are then shared
//! read-only across requests; a missing index answers 409 until `repoctx
//! index` has produced the artifacts.

use crate::commands::PromptResponse;
use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use repoctx_core::pipeline::{self, ContextQuery, IndexArtifacts};
use repoctx_core::{ConfigOverrides, Error as CoreError, PipelineConfig};
use serde::Serialize;
use serde_json::Value;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

pub struct AppState {
    pub root: PathBuf,
    pub config: PipelineConfig,
    artifacts: RwLock<Option<Arc<IndexArtifacts>>>,
}

impl AppState {
    pub fn new(root: PathBuf, config: PipelineConfig) -> AppState {
        AppState {
            root,
            config,
            artifacts: RwLock::new(None),
        }
    }

    /// Get the loaded artifacts, loading them on first use.
    fn artifacts(&self) -> Result<Arc<IndexArtifacts>, ApiError> {
        if let Some(loaded) = self.artifacts.read().expect("lock").as_ref() {
            return Ok(loaded.clone());
        }
        let loaded = pipeline::load_artifacts(&self.root, &self.config).map_err(|e| ApiError {
            status: StatusCode::CONFLICT,
            field: None,
            message: format!("index artifacts unavailable, run `repoctx index` first: {e}"),
        })?;
        let loaded = Arc::new(loaded);
        *self.artifacts.write().expect("lock") = Some(loaded.clone());
        Ok(loaded)
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/context", post(context_endpoint))
        .route("/v1/prompt", post(prompt_endpoint))
        .with_state(state)
}

/// Serve until the process is stopped.
pub async fn serve(state: Arc<AppState>, host: &str, port: u16) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}

async fn healthz() -> &'static str {
    "ok"
}

async fn context_endpoint(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    match handle_context(&state, &body) {
        Ok(report) => Json(report).into_response(),
        Err(err) => err.into_response(),
    }
}

async fn prompt_endpoint(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    match handle_prompt(&state, &body) {
        Ok(response) => Json(response).into_response(),
        Err(err) => err.into_response(),
    }
}

fn handle_context(
    state: &AppState,
    body: &[u8],
) -> Result<repoctx_core::ContextReport, ApiError> {
    let request = parse_request(body)?;
    let artifacts = state.artifacts()?;
    let config = state.config.merged(&request.overrides);
    let (report, _, _) = ContextQuery::new(&artifacts, &config)
        .context(&state.root, &request.file, request.line)
        .map_err(query_error)?;
    Ok(report)
}

fn handle_prompt(state: &AppState, body: &[u8]) -> Result<PromptResponse, ApiError> {
    let request = parse_request(body)?;
    let artifacts = state.artifacts()?;
    let config = state.config.merged(&request.overrides);
    let bundle = ContextQuery::new(&artifacts, &config)
        .prompt(&state.root, &request.file, request.line)
        .map_err(query_error)?;
    Ok(PromptResponse {
        prompt: bundle.full_prompt,
        stats: bundle.stats,
    })
}

struct ContextRequest {
    file: String,
    line: u32,
    overrides: ConfigOverrides,
}

fn parse_request(body: &[u8]) -> Result<ContextRequest, ApiError> {
    let value: Value = serde_json::from_slice(body)
        .map_err(|e| ApiError::bad_request(None, format!("body is not valid JSON: {e}")))?;
    let object = value
        .as_object()
        .ok_or_else(|| ApiError::bad_request(None, "body must be a JSON object".to_string()))?;
    for key in object.keys() {
        if !matches!(key.as_str(), "file" | "line" | "overrides") {
            return Err(ApiError::bad_request(
                Some(key.clone()),
                format!("unknown field {key:?}"),
            ));
        }
    }
    let file = object
        .get("file")
        .and_then(Value::as_str)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| {
            ApiError::bad_request(Some("file".into()), "file must be a nonempty string".into())
        })?
        .to_string();
    let line_value = object
        .get("line")
        .ok_or_else(|| ApiError::bad_request(Some("line".into()), "line is required".into()))?;
    let line = line_value
        .as_u64()
        .filter(|&n| n >= 1 && n <= u64::from(u32::MAX))
        .ok_or_else(|| {
            ApiError::bad_request(
                Some("line".into()),
                "line must be a positive integer".into(),
            )
        })?;
    let overrides = match object.get("overrides") {
        None | Some(Value::Null) => ConfigOverrides::default(),
        Some(value) => serde_json::from_value(value.clone()).map_err(|e| {
            ApiError::bad_request(Some("overrides".into()), format!("invalid overrides: {e}"))
        })?,
    };
    Ok(ContextRequest {
        file,
        line: line as u32,
        overrides,
    })
}

fn query_error(err: CoreError) -> ApiError {
    match &err {
        CoreError::UnknownPath(_) | CoreError::MissingModule(_) => {
            ApiError::bad_request(Some("file".into()), err.to_string())
        }
        CoreError::CursorOutOfRange { .. } => {
            ApiError::bad_request(Some("line".into()), err.to_string())
        }
        CoreError::Param(_) | CoreError::ProviderUnavailable(_) | CoreError::OracleMissing(_) => {
            ApiError::bad_request(Some("overrides".into()), err.to_string())
        }
        _ => ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            field: None,
            message: err.to_string(),
        },
    }
}

struct ApiError {
    status: StatusCode,
    field: Option<String>,
    message: String,
}

impl ApiError {
    fn bad_request(field: Option<String>, message: String) -> ApiError {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            field,
            message,
        }
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: ErrorDetail,
}

#[derive(Serialize)]
struct ErrorDetail {
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<String>,
    message: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: ErrorDetail {
                field: self.field,
                message: self.message,
            },
        };
        (self.status, Json(body)).into_response()
    }
}
