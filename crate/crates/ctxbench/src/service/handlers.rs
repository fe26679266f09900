use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use ctxbench_core::{EntityId, ContextId, Fold, PredictionRow, PredictionSet, SplitSpec};
use serde::{Deserialize, Serialize};

use super::{openapi, ApiError, AppState, Json};
use crate::groups::{GroupData, TaskFamily};
use crate::hash::{canonical_json, sha256_hex};
use crate::registry::{DatasetManifest, Filter, FilterError, RegistryError};

pub const DEFAULT_PAGE: usize = 1000;
pub const MAX_PAGE: usize = 10_000;

type Params = Query<HashMap<String, String>>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

fn bad_request(code: &'static str, message: impl ToString) -> ApiError {
    ApiError::new(StatusCode::BAD_REQUEST, code, message)
}

pub async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint")
}

pub async fn spec() -> Json<serde_json::Value> {
    Json(StatusCode::OK, openapi::spec_document())
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct DatasetSummary {
    pub name: String,
    pub version: u32,
    pub content_hash: String,
    pub rows: usize,
    pub columns: Vec<String>,
    pub parent: Option<crate::registry::DatasetRef>,
    pub has_view: bool,
    pub created_at: String,
    pub latest: bool,
}

pub async fn list_datasets(State(st): State<Arc<AppState>>) -> Result<Json<Vec<DatasetSummary>>, ApiError> {
    let all = blocking(move || Ok(st.registry.list()?)).await?;
    let mut out: Vec<DatasetSummary> = Vec::with_capacity(all.len());
    for (i, m) in all.iter().enumerate() {
        // the index is sorted by (name, version)
        let latest = all.get(i + 1).is_none_or(|n| n.name != m.name);
        out.push(DatasetSummary {
            name: m.name.clone(),
            version: m.version,
            content_hash: m.content_hash.clone(),
            rows: m.rows,
            columns: m.columns.clone(),
            parent: m.parent.clone(),
            has_view: m.view_config.is_some(),
            created_at: m.created_at.clone(),
            latest,
        });
    }
    Ok(Json(StatusCode::OK, out))
}

/// Short digest of a filter expression, bound into cursors.
pub fn filter_digest(filter: &str) -> String {
    sha256_hex(filter.trim().as_bytes())[..16].to_string()
}

pub fn encode_cursor(content_hash: &str, filter: &str, offset: usize) -> String {
    URL_SAFE_NO_PAD.encode(format!("v1:{content_hash}:{}:{offset}", filter_digest(filter)))
}

/// Offset encoded in `cursor`, provided it was issued for this content and
/// filter.
pub fn decode_cursor(cursor: &str, content_hash: &str, filter: &str) -> Result<usize, ApiError> {
    let bad = |why: &str| bad_request("BadCursor", format!("invalid cursor: {why}"));
    let raw = URL_SAFE_NO_PAD.decode(cursor).map_err(|_| bad("not base64url"))?;
    let text = String::from_utf8(raw).map_err(|_| bad("not UTF-8"))?;
    let parts: Vec<&str> = text.split(':').collect();
    let [v, hash, fdig, offset] = parts.as_slice() else {
        return Err(bad("malformed"));
    };
    if *v != "v1" {
        return Err(bad("unknown version"));
    }
    if *hash != content_hash {
        return Err(bad("dataset content changed since the cursor was issued"));
    }
    if *fdig != filter_digest(filter) {
        return Err(bad("filter differs from the one the cursor was issued for"));
    }
    offset.parse().map_err(|_| bad("malformed offset"))
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct RowsPage {
    pub name: String,
    pub version: u32,
    pub content_hash: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub offset: usize,
    pub next_cursor: Option<String>,
    /// Label columns of datasets that back a benchmark group are never served.
    pub withheld_columns: Vec<String>,
}

/// Label columns of `m` when its content backs any benchmark group.
fn withheld_columns(st: &AppState, m: &DatasetManifest) -> Result<Vec<String>, ApiError> {
    let mut out = BTreeSet::new();
    for g in st.groups.list()? {
        let backing = st.registry.manifest(&g.dataset.name, Some(g.dataset.version));
        if matches!(&backing, Ok(b) if b.content_hash == m.content_hash) {
            let col = match g.family {
                TaskFamily::Context | TaskFamily::Binding | TaskFamily::Trial => "label",
            };
            if m.columns.iter().any(|c| c == col) {
                out.insert(col.to_string());
            }
        }
    }
    Ok(out.into_iter().collect())
}

pub async fn dataset_rows(
    State(st): State<Arc<AppState>>,
    Path((name, version)): Path<(String, String)>,
    Query(q): Params,
) -> Result<Json<RowsPage>, ApiError> {
    let version = match version.as_str() {
        "latest" => None,
        v => Some(v.parse::<u32>().map_err(|_| {
            ApiError::new(StatusCode::NOT_FOUND, "UnknownDataset", format!("unknown dataset {name} version {v}"))
        })?),
    };
    let limit = match q.get("limit") {
        None => DEFAULT_PAGE,
        Some(l) => l
            .parse::<usize>()
            .ok()
            .filter(|l| (1..=MAX_PAGE).contains(l))
            .ok_or_else(|| bad_request("BadLimit", format!("limit must be an integer in 1..={MAX_PAGE}")))?,
    };
    let filter = q.get("filter").cloned().unwrap_or_default();
    let cursor = q.get("cursor").cloned();
    let page = blocking(move || {
        let m = st.registry.manifest(&name, version)?;
        let withheld = withheld_columns(&st, &m)?;
        let compiled = Filter::compile(&filter, &m.columns).map_err(RegistryError::from)?;
        if let Some(c) = compiled.columns().find(|c| withheld.iter().any(|w| w == c)) {
            return Err(ApiError::from(RegistryError::BadFilter(FilterError::UnknownColumn(c.to_string())))
                .with("reason", "column is withheld"));
        }
        let offset = match &cursor {
            Some(c) => decode_cursor(c, &m.content_hash, &filter)?,
            None => 0,
        };
        let mut stream = st.registry.stream_dataset(&m.name, Some(m.version), Some(&filter), limit, None)?;
        let mut skipped = 0;
        while skipped < offset {
            match stream.next_row() {
                Some(r) => {
                    r?;
                    skipped += 1;
                }
                None => break,
            }
        }
        let keep: Vec<usize> = (0..m.columns.len()).filter(|&i| !withheld.contains(&m.columns[i])).collect();
        let mut rows = Vec::with_capacity(limit.min(1024));
        let mut more = false;
        while let Some(r) = stream.next_row() {
            let r = r?;
            if rows.len() == limit {
                more = true;
                break;
            }
            rows.push(keep.iter().map(|&i| r[i].clone()).collect());
        }
        let next_cursor = more.then(|| encode_cursor(&m.content_hash, &filter, offset + rows.len()));
        Ok(RowsPage {
            name: m.name.clone(),
            version: m.version,
            content_hash: m.content_hash.clone(),
            columns: keep.iter().map(|&i| m.columns[i].clone()).collect(),
            rows,
            offset,
            next_cursor,
            withheld_columns: withheld,
        })
    })
    .await?;
    Ok(Json(StatusCode::OK, page))
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct LabeledRow {
    pub entity: String,
    pub context: String,
    pub label: u8,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct UnlabeledRow {
    pub entity: String,
    pub context: String,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct SplitDocument {
    pub group_id: String,
    pub seed: u64,
    pub split: SplitSpec,
    pub train: Vec<LabeledRow>,
    pub valid: Vec<LabeledRow>,
    pub test: Vec<UnlabeledRow>,
}

impl SplitDocument {
    pub fn build(data: &GroupData, seed: u64) -> Result<Self, crate::groups::GroupError> {
        let split = data.split(seed)?;
        let labeled = |fold| {
            data.fold(&split, fold)
                .into_iter()
                .map(|s| LabeledRow {
                    entity: s.entity.to_string(),
                    context: s.context.to_string(),
                    label: s.label.into(),
                })
                .collect()
        };
        let test = data
            .fold(&split, Fold::Test)
            .into_iter()
            .map(|s| UnlabeledRow {
                entity: s.entity.to_string(),
                context: s.context.to_string(),
            })
            .collect();
        Ok(Self {
            group_id: data.group.group_id.clone(),
            seed,
            train: labeled(Fold::Train),
            valid: labeled(Fold::Valid),
            test,
            split,
        })
    }
}

fn seed_param(q: &HashMap<String, String>) -> Result<u64, ApiError> {
    match q.get("seed") {
        None => Ok(0),
        Some(s) => s.parse().map_err(|_| bad_request("BadSeed", "seed must be a non-negative integer")),
    }
}

fn load_group(st: &AppState, group: &str) -> Result<GroupData, ApiError> {
    let g = st.groups.get(group)?;
    Ok(GroupData::load(&st.registry, &g)?)
}

pub async fn split(
    State(st): State<Arc<AppState>>,
    Path(group): Path<String>,
    Query(q): Params,
) -> Result<Json<SplitDocument>, ApiError> {
    let seed = seed_param(&q)?;
    let doc = blocking(move || {
        let data = load_group(&st, &group)?;
        Ok(SplitDocument::build(&data, seed)?)
    })
    .await?;
    Ok(Json(StatusCode::OK, doc))
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct PredictionInput {
    pub entity: String,
    pub context: String,
    pub score: f64,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EvaluateRequest {
    pub seed: u64,
    pub predictions: Vec<PredictionInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submission_id: Option<String>,
}

impl EvaluateRequest {
    pub fn prediction_set(&self, dataset_ref: &str) -> Result<PredictionSet, ApiError> {
        let rows = self
            .predictions
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let bad = |e: ctxbench_core::DataError| bad_request("BadPredictions", format!("prediction {i}: {e}")).with("index", i);
                PredictionRow::new(
                    EntityId::new(p.entity.as_str()).map_err(bad)?,
                    ContextId::new(p.context.as_str()).map_err(bad)?,
                    p.score,
                )
                .map_err(bad)
            })
            .collect::<Result<Vec<_>, _>>()?;
        PredictionSet::new(dataset_ref, rows).map_err(|e| bad_request("BadPredictions", e))
    }

    /// Explicit id, else a digest of the submitted predictions.
    pub fn submission(&self) -> String {
        match &self.submission_id {
            Some(s) => s.clone(),
            None => format!("anon-{}", &sha256_hex(canonical_json(&self.predictions).as_bytes())[..12]),
        }
    }
}

pub async fn evaluate(
    State(st): State<Arc<AppState>>,
    Path(group): Path<String>,
    body: Bytes,
) -> Result<Json<ctxbench_core::MetricReport>, ApiError> {
    let req: EvaluateRequest =
        serde_json::from_slice(&body).map_err(|e| bad_request("BadRequest", format!("invalid body: {e}")))?;
    let submission = req.submission();
    if submission.is_empty() || submission.len() > 200 {
        return Err(bad_request("BadRequest", "submission_id must have 1 to 200 characters"));
    }
    let report = blocking(move || {
        let data = load_group(&st, &group)?;
        let preds = req.prediction_set(&data.group.dataset.to_string())?;
        let report = data.evaluate(req.seed, &preds)?;
        st.boards
            .record(&data.group.group_id, &submission, &data.group.primary_metric, &report)
            .map_err(ApiError::internal)?;
        Ok(report)
    })
    .await?;
    Ok(Json(StatusCode::OK, report))
}

pub async fn leaderboard(
    State(st): State<Arc<AppState>>,
    Path(group): Path<String>,
) -> Result<Json<Vec<crate::leaderboard::LeaderboardEntry>>, ApiError> {
    let board = blocking(move || {
        st.groups.get(&group)?;
        st.boards.board(&group).map_err(ApiError::internal)
    })
    .await?;
    Ok(Json(StatusCode::OK, board))
}
