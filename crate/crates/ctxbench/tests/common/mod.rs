#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use ctxbench::registry::fetch::{build_fetcher, CountingTransport, StaticTransport};
use ctxbench::registry::{DataViewConfig, DatasetManifest, FetchMode, FetcherSpec, Registry, Table};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn listing_config() -> DataViewConfig {
    serde_json::from_slice(&std::fs::read(fixture("brown_view.json")).unwrap()).unwrap()
}

/// Registers the listing's source table and runs its view in fixture mode.
/// Returns the output, its manifest and the number of transport calls made.
pub fn run_listing_view(registry: &Registry) -> (Table, DatasetManifest, usize) {
    let src = std::fs::read(fixture("brown_mdm2_ace2_12ca5.csv")).unwrap();
    registry.register_dataset("brown_mdm2_ace2_12ca5", &src, None, None).unwrap();
    let transport = Arc::new(CountingTransport::new(StaticTransport::default()));
    let spec = FetcherSpec {
        fixture_path: Some(fixture("target_sequences.json")),
        ..FetcherSpec::default()
    };
    let fetcher = build_fetcher(&spec, FetchMode::Fixture, transport.clone()).unwrap();
    let (table, manifest) = registry.apply_view(&listing_config(), "brown_view", fetcher.as_ref()).unwrap();
    (table, manifest, transport.calls())
}

/// CSV text with a header and `n` rows of mixed types.
pub fn numbered_csv(n: usize) -> Vec<u8> {
    let mut s = String::from("id,group,value,note\n");
    for i in 0..n {
        s += &format!("r{i:05},{},{},\"a, b {i}\"\n", ["x", "y", "z"][i % 3], i as f64 * 0.5);
    }
    s.into_bytes()
}
