//! Sequence lookup for the `insert_sequence` view step.
//!
//! Two sources: a JSON fixture map for offline runs and a REST GET endpoint
//! returning FASTA. The `CTXBENCH_FETCHER` environment variable (`fixture` or
//! `live`) picks between them; fixture is the default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub const FETCHER_ENV: &str = "CTXBENCH_FETCHER";

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum FetchError {
    #[error("fetching {key}: {message}")]
    Failure { key: String, message: String },
    #[error("no fixture sequence for {0}")]
    FixtureMissing(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FetcherKind {
    RestGetSequence,
    #[default]
    FixtureFile,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FetchMode {
    Fixture,
    Live,
}

impl FetchMode {
    /// Reads `CTXBENCH_FETCHER`; anything other than `live` means fixture.
    pub fn from_env() -> Self {
        match std::env::var(FETCHER_ENV).as_deref() {
            Ok("live") => FetchMode::Live,
            _ => FetchMode::Fixture,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FetcherSpec {
    pub kind: FetcherKind,
    /// URL with an `{id}` placeholder, e.g. `https://rest.uniprot.org/uniprotkb/search?query=gene_exact:{id}+AND+organism_id:9606&format=fasta&size=1`.
    pub endpoint_template: String,
    pub cache_dir: Option<PathBuf>,
    pub timeout_secs: u64,
    /// JSON object mapping keys to sequences.
    pub fixture_path: Option<PathBuf>,
}

impl Default for FetcherSpec {
    fn default() -> Self {
        Self {
            kind: FetcherKind::FixtureFile,
            endpoint_template: "https://rest.uniprot.org/uniprotkb/search?query=gene_exact:{id}+AND+organism_id:9606&format=fasta&size=1".into(),
            cache_dir: None,
            timeout_secs: 30,
            fixture_path: None,
        }
    }
}

pub trait SequenceFetcher: Send + Sync {
    fn fetch(&self, key: &str) -> Result<String, FetchError>;
}

/// Minimal HTTP GET, so tests can substitute a fake.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str, timeout: Duration) -> Result<String, String>;
}

pub struct UreqTransport;

impl Transport for UreqTransport {
    fn get(&self, url: &str, timeout: Duration) -> Result<String, String> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        agent
            .get(url)
            .call()
            .map_err(|e| e.to_string())?
            .body_mut()
            .read_to_string()
            .map_err(|e| e.to_string())
    }
}

/// Wraps a transport and counts calls.
pub struct CountingTransport<T> {
    inner: T,
    calls: AtomicUsize,
}

impl<T> CountingTransport<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<T: Transport> Transport for CountingTransport<T> {
    fn get(&self, url: &str, timeout: Duration) -> Result<String, String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.get(url, timeout)
    }
}

impl<T: Transport> Transport for std::sync::Arc<T> {
    fn get(&self, url: &str, timeout: Duration) -> Result<String, String> {
        (**self).get(url, timeout)
    }
}

/// Canned responses keyed by URL; unknown URLs fail.
#[derive(Default)]
pub struct StaticTransport(pub BTreeMap<String, String>);

impl Transport for StaticTransport {
    fn get(&self, url: &str, _timeout: Duration) -> Result<String, String> {
        self.0.get(url).cloned().ok_or_else(|| format!("no route for {url}"))
    }
}

pub struct FixtureFetcher {
    sequences: BTreeMap<String, String>,
}

impl FixtureFetcher {
    pub fn new(sequences: BTreeMap<String, String>) -> Self {
        Self { sequences }
    }

    pub fn from_file(path: &Path) -> Result<Self, FetchError> {
        let fail = |message: String| FetchError::Failure {
            key: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
        let sequences = serde_json::from_str(&text).map_err(|e| fail(e.to_string()))?;
        Ok(Self { sequences })
    }
}

impl SequenceFetcher for FixtureFetcher {
    fn fetch(&self, key: &str) -> Result<String, FetchError> {
        self.sequences
            .get(key)
            .cloned()
            .ok_or_else(|| FetchError::FixtureMissing(key.to_string()))
    }
}

/// Sequence residues of a FASTA document: header lines dropped, the first
/// record's sequence lines joined.
pub fn parse_fasta(text: &str) -> Option<String> {
    let mut seq = String::new();
    let mut in_record = false;
    for line in text.lines().map(str::trim) {
        if let Some(_header) = line.strip_prefix('>') {
            if in_record {
                break;
            }
            in_record = true;
        } else if !line.is_empty() {
            seq.push_str(line);
        }
    }
    (!seq.is_empty()).then_some(seq)
}

pub struct RestFetcher<T> {
    transport: T,
    endpoint_template: String,
    timeout: Duration,
    cache_dir: Option<PathBuf>,
    memo: Mutex<BTreeMap<String, String>>,
}

impl<T: Transport> RestFetcher<T> {
    pub fn new(transport: T, spec: &FetcherSpec) -> Self {
        Self {
            transport,
            endpoint_template: spec.endpoint_template.clone(),
            timeout: Duration::from_secs(spec.timeout_secs.max(1)),
            cache_dir: spec.cache_dir.clone(),
            memo: Mutex::new(BTreeMap::new()),
        }
    }

    fn cache_file(&self, key: &str) -> Option<PathBuf> {
        let safe: String = key
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect();
        let digest = &crate::hash::sha256_hex(key.as_bytes())[..12];
        self.cache_dir.as_ref().map(|d| d.join(format!("{safe}-{digest}.fasta")))
    }
}

impl<T: Transport> SequenceFetcher for RestFetcher<T> {
    fn fetch(&self, key: &str) -> Result<String, FetchError> {
        if let Some(s) = self.memo.lock().expect("memo lock").get(key) {
            return Ok(s.clone());
        }
        let file = self.cache_file(key);
        if let Some(seq) = file
            .as_ref()
            .and_then(|f| std::fs::read_to_string(f).ok())
            .and_then(|t| parse_fasta(&t))
        {
            self.memo.lock().expect("memo lock").insert(key.to_string(), seq.clone());
            return Ok(seq);
        }
        let url = self.endpoint_template.replace("{id}", key);
        let fail = |message: String| FetchError::Failure {
            key: key.to_string(),
            message,
        };
        let body = self.transport.get(&url, self.timeout).map_err(fail)?;
        let seq = parse_fasta(&body).ok_or_else(|| fail("response has no FASTA sequence".into()))?;
        if let Some(f) = file {
            if let Some(dir) = f.parent() {
                let _ = std::fs::create_dir_all(dir);
            }
            let _ = std::fs::write(&f, format!(">{key}\n{seq}\n"));
        }
        self.memo.lock().expect("memo lock").insert(key.to_string(), seq.clone());
        Ok(seq)
    }
}

/// Builds the fetcher selected by `mode`. Fixture mode never touches
/// `transport`.
pub fn build_fetcher<T: Transport + 'static>(
    spec: &FetcherSpec,
    mode: FetchMode,
    transport: T,
) -> Result<Box<dyn SequenceFetcher>, FetchError> {
    let fixture = || -> Result<Box<dyn SequenceFetcher>, FetchError> {
        match &spec.fixture_path {
            Some(p) => Ok(Box::new(FixtureFetcher::from_file(p)?)),
            None => Ok(Box::new(FixtureFetcher::new(BTreeMap::new()))),
        }
    };
    match (mode, spec.kind) {
        (FetchMode::Fixture, _) | (FetchMode::Live, FetcherKind::FixtureFile) => fixture(),
        (FetchMode::Live, FetcherKind::RestGetSequence) => Ok(Box::new(RestFetcher::new(transport, spec))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn fasta_first_record() {
        let text = ">sp|Q00987|MDM2_HUMAN\nMCNT\nNMSV\n>second\nAAAA\n";
        assert_eq!(parse_fasta(text).as_deref(), Some("MCNTNMSV"));
        assert_eq!(parse_fasta(""), None);
    }

    #[test]
    fn rest_fetch_is_cached() {
        let dir = tempfile::tempdir().unwrap();
        let spec = FetcherSpec {
            kind: FetcherKind::RestGetSequence,
            endpoint_template: "http://x/{id}.fasta".into(),
            cache_dir: Some(dir.path().to_path_buf()),
            ..Default::default()
        };
        let routes = [("http://x/MDM2.fasta".to_string(), ">h\nMCNT\n".to_string())].into();
        let transport = Arc::new(CountingTransport::new(StaticTransport(routes)));
        let f = RestFetcher::new(transport.clone(), &spec);
        assert_eq!(f.fetch("MDM2").unwrap(), "MCNT");
        assert_eq!(f.fetch("MDM2").unwrap(), "MCNT");
        assert_eq!(transport.calls(), 1);
        // a fresh fetcher finds the on-disk cache
        let g = RestFetcher::new(transport.clone(), &spec);
        assert_eq!(g.fetch("MDM2").unwrap(), "MCNT");
        assert_eq!(transport.calls(), 1);
        assert!(matches!(g.fetch("ACE2"), Err(FetchError::Failure { .. })));
    }

    #[test]
    fn fixture_mode_ignores_transport() {
        let spec = FetcherSpec {
            kind: FetcherKind::RestGetSequence,
            ..Default::default()
        };
        let transport = Arc::new(CountingTransport::new(StaticTransport::default()));
        let f = build_fetcher(&spec, FetchMode::Fixture, transport.clone()).unwrap();
        assert_eq!(f.fetch("MDM2"), Err(FetchError::FixtureMissing("MDM2".into())));
        assert_eq!(transport.calls(), 0);
    }
}
