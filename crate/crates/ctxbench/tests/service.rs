mod common;

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use ctxbench::cli::synth_planted;
use ctxbench::groups::{GroupData, GroupStore};
use ctxbench::hash::canonical_json;
use ctxbench::registry::Registry;
use ctxbench::service::{router, AppState, EvaluateRequest, PredictionInput, RowsPage, SplitDocument};
use ctxbench_core::synthetic::PlantedPartitionConfig;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

fn setup() -> (tempfile::TempDir, Arc<AppState>) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PlantedPartitionConfig {
        nodes: 200,
        communities: 10,
        pathway_communities: 3,
        ..Default::default()
    };
    synth_planted(dir.path(), "toy", &cfg).unwrap();
    let state = AppState::open(dir.path()).unwrap();
    (dir, state)
}

async fn call(state: &Arc<AppState>, method: &str, uri: &str, body: Option<String>) -> (StatusCode, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

fn json(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

fn group_data(dir: &Path, id: &str) -> GroupData {
    let registry = Registry::open(dir).unwrap();
    let g = GroupStore::open(dir).unwrap().get(id).unwrap();
    GroupData::load(&registry, &g).unwrap()
}

/// Deterministic pseudo-scores on the test fold.
fn predictions(doc: &SplitDocument, salt: u64) -> Vec<PredictionInput> {
    doc.test
        .iter()
        .enumerate()
        .map(|(i, r)| PredictionInput {
            entity: r.entity.clone(),
            context: r.context.clone(),
            score: ((i as u64 * 2654435761 + salt) % 1000) as f64 / 999.0,
        })
        .collect()
}

#[tokio::test]
async fn lists_datasets_with_latest_flags() {
    let (dir, state) = setup();
    state.registry.register_dataset("toy", &common::numbered_csv(3), None, None).unwrap();
    let (status, body) = call(&state, "GET", "/v1/datasets", None).await;
    assert_eq!(status, StatusCode::OK);
    let list = json(&body);
    let toy: Vec<(u64, bool)> = list
        .as_array()
        .unwrap()
        .iter()
        .filter(|d| d["name"] == "toy")
        .map(|d| (d["version"].as_u64().unwrap(), d["latest"].as_bool().unwrap()))
        .collect();
    assert_eq!(toy, [(1, false), (2, true)]);
    drop(dir);
}

#[tokio::test]
async fn pages_reassemble_the_dataset() {
    let (_dir, state) = setup();
    state.registry.register_dataset("big", &common::numbered_csv(2503), None, None).unwrap();
    let (_, eager) = state.registry.read_table("big", None).unwrap();
    for (filter, expected) in [
        ("", eager.rows.clone()),
        ("group == \"x\"", eager.rows.iter().filter(|r| r[1] == "x").cloned().collect()),
    ] {
        let mut rows = Vec::new();
        let mut cursor: Option<String> = None;
        let mut pages = 0;
        loop {
            let mut uri = format!("/v1/datasets/big/latest/rows?limit=400&filter={}", urlencode(filter));
            if let Some(c) = &cursor {
                uri += &format!("&cursor={c}");
            }
            let (status, body) = call(&state, "GET", &uri, None).await;
            assert_eq!(status, StatusCode::OK, "{body}");
            let page: RowsPage = serde_json::from_str(&body).unwrap();
            assert!(page.rows.len() <= 400);
            rows.extend(page.rows);
            pages += 1;
            match page.next_cursor {
                Some(c) => cursor = Some(c),
                None => break,
            }
        }
        assert_eq!(rows, expected);
        assert_eq!(pages, expected.len().div_ceil(400).max(1));
    }
}

fn urlencode(s: &str) -> String {
    s.bytes()
        .map(|b| match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' => (b as char).to_string(),
            _ => format!("%{b:02X}"),
        })
        .collect()
}

#[tokio::test]
async fn row_errors_have_stable_codes() {
    let (_dir, state) = setup();
    state.registry.register_dataset("big", &common::numbered_csv(30), None, None).unwrap();
    let (_, body) = call(&state, "GET", "/v1/datasets/big/1/rows?limit=10", None).await;
    let cursor = json(&body)["next_cursor"].as_str().unwrap().to_string();
    let cases = [
        ("/v1/datasets/big/1/rows?limit=0".to_string(), StatusCode::BAD_REQUEST, "BadLimit"),
        ("/v1/datasets/big/1/rows?limit=10001".to_string(), StatusCode::BAD_REQUEST, "BadLimit"),
        ("/v1/datasets/big/7/rows".to_string(), StatusCode::NOT_FOUND, "UnknownDataset"),
        ("/v1/datasets/nope/latest/rows".to_string(), StatusCode::NOT_FOUND, "UnknownDataset"),
        ("/v1/datasets/big/1/rows?filter=zzz%20%3D%3D%201".to_string(), StatusCode::BAD_REQUEST, "BadFilter"),
        ("/v1/datasets/big/1/rows?cursor=%%%".to_string(), StatusCode::BAD_REQUEST, "BadCursor"),
        (format!("/v1/datasets/big/1/rows?filter=value%20%3E%201&cursor={cursor}"), StatusCode::BAD_REQUEST, "BadCursor"),
        ("/v1/nothing".to_string(), StatusCode::NOT_FOUND, "NotFound"),
    ];
    for (uri, status, code) in cases {
        let (s, body) = call(&state, "GET", &uri, None).await;
        assert_eq!((s, json(&body)["error"].as_str().unwrap().to_string()), (status, code.to_string()), "{uri}");
    }
    let (_, body) = call(&state, "GET", "/v1/datasets/big/1/rows?filter=zzz%20%3D%3D%201", None).await;
    assert_eq!(json(&body)["column"], "zzz");
    // a cursor issued for old content is rejected after the data changes
    state.registry.register_dataset("big", &common::numbered_csv(31), None, None).unwrap();
    let (s, body) = call(&state, "GET", &format!("/v1/datasets/big/latest/rows?cursor={cursor}"), None).await;
    assert_eq!((s, json(&body)["error"].clone()), (StatusCode::BAD_REQUEST, Value::from("BadCursor")));
}

#[tokio::test]
async fn group_labels_are_withheld_from_rows() {
    let (_dir, state) = setup();
    let (status, body) = call(&state, "GET", "/v1/datasets/toy/1/rows?limit=5", None).await;
    assert_eq!(status, StatusCode::OK);
    let page: RowsPage = serde_json::from_str(&body).unwrap();
    assert_eq!(page.columns, ["entity", "context"]);
    assert_eq!(page.withheld_columns, ["label"]);
    let (status, body) = call(&state, "GET", "/v1/datasets/toy/1/rows?filter=label%20%3D%3D%201", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(json(&body)["column"], "label");
}

#[tokio::test]
async fn split_document_hides_test_labels_and_is_deterministic() {
    let (dir, state) = setup();
    let (status, a) = call(&state, "GET", "/v1/benchmarks/toy/split?seed=3", None).await;
    assert_eq!(status, StatusCode::OK);
    let (_, b) = call(&state, "GET", "/v1/benchmarks/toy/split?seed=3", None).await;
    assert_eq!(a, b);
    let v = json(&a);
    assert!(v["test"].as_array().unwrap().iter().all(|r| r.get("label").is_none()));
    assert!(v["train"].as_array().unwrap().iter().all(|r| r.get("label").is_some()));
    let doc: SplitDocument = serde_json::from_str(&a).unwrap();
    let data = group_data(dir.path(), "toy");
    assert_eq!(doc.split, data.split(3).unwrap());
    let (status, _) = call(&state, "GET", "/v1/benchmarks/nope/split", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&state, "GET", "/v1/benchmarks/toy/split?seed=-1", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn evaluate_matches_library_and_feeds_the_leaderboard() {
    let (dir, state) = setup();
    let data = group_data(dir.path(), "toy");
    for seed in [0u64, 1] {
        let (_, body) = call(&state, "GET", &format!("/v1/benchmarks/toy/split?seed={seed}"), None).await;
        let doc: SplitDocument = serde_json::from_str(&body).unwrap();
        let req = EvaluateRequest {
            seed,
            predictions: predictions(&doc, seed),
            submission_id: Some("mine".into()),
        };
        let (status, body) = call(&state, "POST", "/v1/benchmarks/toy/evaluate", Some(serde_json::to_string(&req).unwrap())).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        let expected = data.evaluate(seed, &req.prediction_set("toy@1").unwrap()).unwrap();
        assert_eq!(body, canonical_json(&expected));
    }
    let (status, body) = call(&state, "GET", "/v1/leaderboards/toy", None).await;
    assert_eq!(status, StatusCode::OK);
    let board = json(&body);
    assert_eq!(board.as_array().unwrap().len(), 1);
    assert_eq!(board[0]["submission_id"], "mine");
    assert_eq!(board[0]["n_seeds"], 2);
    let (status, _) = call(&state, "GET", "/v1/leaderboards/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn evaluate_rejects_bad_submissions() {
    let (_dir, state) = setup();
    let (_, body) = call(&state, "GET", "/v1/benchmarks/toy/split?seed=0", None).await;
    let doc: SplitDocument = serde_json::from_str(&body).unwrap();
    let mut preds = predictions(&doc, 0);
    preds.truncate(preds.len() - 3);
    let short = serde_json::json!({"seed": 0, "predictions": preds});
    let (status, body) = call(&state, "POST", "/v1/benchmarks/toy/evaluate", Some(short.to_string())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!((json(&body)["error"].clone(), json(&body)["count"].clone()), (Value::from("MissingPredictions"), Value::from(3)));
    let mut extra = predictions(&doc, 0);
    extra.push(PredictionInput { entity: "ghost".into(), context: "ctx00".into(), score: 0.1 });
    let (status, body) = call(&state, "POST", "/v1/benchmarks/toy/evaluate", Some(serde_json::json!({"seed": 0, "predictions": extra}).to_string())).await;
    assert_eq!((status, json(&body)["error"].clone()), (StatusCode::BAD_REQUEST, Value::from("UnknownKeys")));
    let mut high = predictions(&doc, 0);
    high[0].score = 1.5;
    let (status, body) = call(&state, "POST", "/v1/benchmarks/toy/evaluate", Some(serde_json::json!({"seed": 0, "predictions": high}).to_string())).await;
    assert_eq!((status, json(&body)["error"].clone()), (StatusCode::BAD_REQUEST, Value::from("BadPredictions")));
    let (status, _) = call(&state, "POST", "/v1/benchmarks/toy/evaluate", Some("{not json".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&state, "POST", "/v1/benchmarks/nope/evaluate", Some(short.to_string())).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn spec_document_is_served() {
    let (_dir, state) = setup();
    let (status, body) = call(&state, "GET", "/v1/spec", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json(&body)["openapi"], "3.1.0");
}
