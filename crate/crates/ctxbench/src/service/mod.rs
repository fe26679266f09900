//! HTTP benchmark service.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/v1/datasets` | manifest summaries |
//! | GET | `/v1/datasets/{name}/{version}/rows` | filtered row pages (`version` may be `latest`) |
//! | GET | `/v1/benchmarks/{group}/split?seed=` | split document, test rows unlabeled |
//! | POST | `/v1/benchmarks/{group}/evaluate` | metric report for one seed |
//! | GET | `/v1/leaderboards/{group}` | ranked submissions |
//! | GET | `/v1/spec` | endpoint description |
//!
//! Bodies are canonical JSON (sorted keys). Metrics and splits are computed
//! by the same library calls the CLI uses.

mod handlers;
mod openapi;

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Serialize;

use crate::config::Config;
use crate::groups::{GroupError, GroupStore};
use crate::hash::canonical_json;
use crate::leaderboard::Leaderboards;
use crate::registry::{Registry, RegistryError};

pub use handlers::{
    decode_cursor, encode_cursor, filter_digest, DatasetSummary, EvaluateRequest, LabeledRow, PredictionInput, RowsPage,
    SplitDocument, UnlabeledRow, DEFAULT_PAGE, MAX_PAGE,
};
pub use openapi::spec_document;

pub struct AppState {
    pub registry: Registry,
    pub groups: GroupStore,
    pub boards: Leaderboards,
}

impl AppState {
    pub fn open(data_dir: &Path) -> Result<Arc<Self>, ApiError> {
        Ok(Arc::new(Self {
            registry: Registry::open(data_dir)?,
            groups: GroupStore::open(data_dir)?,
            boards: Leaderboards::open(data_dir).map_err(ApiError::internal)?,
        }))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/datasets", get(handlers::list_datasets))
        .route("/v1/datasets/{name}/{version}/rows", get(handlers::dataset_rows))
        .route("/v1/benchmarks/{group}/split", get(handlers::split))
        .route("/v1/benchmarks/{group}/evaluate", post(handlers::evaluate))
        .route("/v1/leaderboards/{group}", get(handlers::leaderboard))
        .route("/v1/spec", get(handlers::spec))
        .fallback(handlers::not_found)
        .with_state(state)
}

/// Binds and serves until ctrl-c.
pub async fn serve(cfg: &Config) -> std::io::Result<()> {
    let state = AppState::open(&cfg.data_dir).map_err(|e| std::io::Error::other(e.message))?;
    let addr: SocketAddr = format!("{}:{}", cfg.bind, cfg.port)
        .parse()
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, format!("bad bind address: {e}")))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// A JSON body serialized canonically.
pub struct Json<T>(pub StatusCode, pub T);

impl<T: Serialize> IntoResponse for Json<T> {
    fn into_response(self) -> Response {
        (self.0, [(header::CONTENT_TYPE, "application/json")], canonical_json(&self.1)).into_response()
    }
}

/// Error body: `{"error": <code>, "message": <text>, ...details}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: serde_json::Map<String, serde_json::Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl ToString) -> Self {
        Self {
            status,
            code,
            message: message.to_string(),
            details: serde_json::Map::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.details.insert(key.to_string(), value.into());
        self
    }

    pub fn internal(e: impl ToString) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = self.details;
        body.insert("error".into(), self.code.into());
        body.insert("message".into(), self.message.into());
        Json(self.status, body).into_response()
    }
}

impl From<RegistryError> for ApiError {
    fn from(e: RegistryError) -> Self {
        match &e {
            RegistryError::UnknownDataset { name, version } => ApiError::new(StatusCode::NOT_FOUND, "UnknownDataset", &e)
                .with("name", name.as_str())
                .with("version", version.as_str()),
            RegistryError::BadFilter(f) => {
                let err = ApiError::new(StatusCode::BAD_REQUEST, "BadFilter", &e);
                match f.column() {
                    Some(c) => err.with("column", c),
                    None => err,
                }
            }
            RegistryError::BadChunkSize => ApiError::new(StatusCode::BAD_REQUEST, "BadLimit", &e),
            _ => ApiError::internal(&e),
        }
    }
}

impl From<GroupError> for ApiError {
    fn from(e: GroupError) -> Self {
        use ctxbench_core::MetricError as M;
        match e {
            GroupError::UnknownGroup(g) => {
                ApiError::new(StatusCode::NOT_FOUND, "UnknownGroup", format!("unknown group {g}")).with("group", g)
            }
            GroupError::Registry(r) => r.into(),
            GroupError::Metric(m) => match m {
                M::MissingPredictions(n) => {
                    ApiError::new(StatusCode::BAD_REQUEST, "MissingPredictions", &m).with("count", n)
                }
                M::UnknownKeys(n) => ApiError::new(StatusCode::BAD_REQUEST, "UnknownKeys", &m).with("count", n),
                M::DegenerateSlice {
                    ref context,
                    positives,
                    negatives,
                } => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "DegenerateSlice", &m)
                    .with("context", context.clone())
                    .with("positives", positives)
                    .with("negatives", negatives),
                M::EmptySlice | M::NotEnoughContexts { .. } => {
                    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "DegenerateSlice", &m)
                }
                other => ApiError::new(StatusCode::BAD_REQUEST, "BadPredictions", other),
            },
            GroupError::Split(s) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "SplitFailed", s),
            other => ApiError::internal(other),
        }
    }
}
