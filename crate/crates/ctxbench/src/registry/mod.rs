//! Versioned dataset catalog.
//!
//! Layout under the data directory:
//!
//! ```text
//! registry/index.json          manifests, sorted by (name, version)
//! registry/blobs/<sha256>.csv  content-addressed raw CSV
//! registry/.lock               held exclusively while registering
//! ```
//!
//! Blobs are immutable and the index is replaced atomically, so readers never
//! take the lock.

pub mod fetch;
pub mod filter;
mod stream;
mod table;
pub mod view;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::hash::sha256_hex;
use crate::io::IoError;

pub use fetch::{FetchError, FetchMode, FetcherSpec, SequenceFetcher};
pub use filter::{Filter, FilterError};
pub use stream::{RowBatch, RowGauge, RowStream};
pub use table::Table;
pub use view::{run_view, DataViewConfig, Transform, ViewError, SEQUENCE_COLUMN};

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("unknown dataset {name} version {version}")]
    UnknownDataset { name: String, version: String },
    #[error("unknown parent {name} version {version}")]
    UnknownParent { name: String, version: u32 },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("blob {0} already exists with different content")]
    HashCollision(String),
    #[error("stored bytes of {name} v{version} do not match content hash {expected}")]
    HashMismatch { name: String, version: u32, expected: String },
    #[error("dataset name must be non-empty and contain no '/'")]
    BadName,
    #[error("lineage of {0} is cyclic")]
    CyclicLineage(String),
    #[error("chunk size must be at least 1")]
    BadChunkSize,
    #[error(transparent)]
    BadFilter(#[from] FilterError),
    #[error(transparent)]
    View(#[from] ViewError),
    #[error("corrupt registry index: {0}")]
    CorruptIndex(String),
    #[error(transparent)]
    Format(#[from] IoError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Integer,
    Number,
    Text,
}

impl ColumnType {
    /// Empty cells are allowed in every type.
    fn accepts(self, cell: &str) -> bool {
        let cell = cell.trim();
        cell.is_empty()
            || match self {
                ColumnType::Integer => cell.parse::<i64>().is_ok(),
                ColumnType::Number => cell.parse::<f64>().is_ok(),
                ColumnType::Text => true,
            }
    }
}

pub type Schema = BTreeMap<String, ColumnType>;

/// Narrowest type per column that accepts every cell.
pub fn infer_schema(t: &Table) -> Schema {
    t.columns
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let ty = [ColumnType::Integer, ColumnType::Number]
                .into_iter()
                .find(|ty| t.rows.iter().all(|r| ty.accepts(&r[i])))
                .unwrap_or(ColumnType::Text);
            (c.clone(), ty)
        })
        .collect()
}

fn check_schema(t: &Table, schema: &Schema) -> Result<(), RegistryError> {
    let have: BTreeSet<&str> = t.columns.iter().map(String::as_str).collect();
    if have.len() != t.columns.len() {
        return Err(RegistryError::SchemaMismatch("duplicate column names".into()));
    }
    let want: BTreeSet<&str> = schema.keys().map(String::as_str).collect();
    if have != want {
        let missing: Vec<_> = want.difference(&have).collect();
        let extra: Vec<_> = have.difference(&want).collect();
        return Err(RegistryError::SchemaMismatch(format!("missing columns {missing:?}, undeclared columns {extra:?}")));
    }
    for (i, c) in t.columns.iter().enumerate() {
        let ty = schema[c];
        if let Some((r, row)) = t.rows.iter().enumerate().find(|(_, row)| !ty.accepts(&row[i])) {
            return Err(RegistryError::SchemaMismatch(format!(
                "row {} column {c:?}: {:?} is not {ty:?}",
                r + 1,
                row[i]
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DatasetRef {
    pub name: String,
    pub version: u32,
}

impl DatasetRef {
    pub fn new(name: impl Into<String>, version: u32) -> Self {
        Self {
            name: name.into(),
            version,
        }
    }
}

impl std::fmt::Display for DatasetRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}@{}", self.name, self.version)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub version: u32,
    pub content_hash: String,
    pub schema: Schema,
    /// Column order of the stored table.
    pub columns: Vec<String>,
    pub rows: usize,
    pub parent: Option<DatasetRef>,
    pub view_config: Option<DataViewConfig>,
    pub created_at: String,
}

impl DatasetManifest {
    pub fn reference(&self) -> DatasetRef {
        DatasetRef::new(&self.name, self.version)
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Index {
    datasets: Vec<DatasetManifest>,
}

/// Handle on a registry directory. Cheap to clone; holds no open files.
#[derive(Clone, Debug)]
pub struct Registry {
    root: PathBuf,
}

impl Registry {
    /// Opens (creating if needed) the registry under `data_dir`.
    pub fn open(data_dir: &Path) -> Result<Self, RegistryError> {
        let root = data_dir.join("registry");
        fs::create_dir_all(root.join("blobs"))?;
        Ok(Self { root })
    }

    fn index_path(&self) -> PathBuf {
        self.root.join("index.json")
    }

    pub fn blob_path(&self, hash: &str) -> PathBuf {
        self.root.join("blobs").join(format!("{hash}.csv"))
    }

    fn load_index(&self) -> Result<Index, RegistryError> {
        match fs::read(self.index_path()) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| RegistryError::CorruptIndex(e.to_string())),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Index::default()),
            Err(e) => Err(e.into()),
        }
    }

    fn store_index(&self, index: &Index) -> Result<(), RegistryError> {
        let tmp = self.root.join("index.json.tmp");
        let mut f = File::create(&tmp)?;
        f.write_all(&serde_json::to_vec_pretty(index).expect("serializable index"))?;
        f.sync_all()?;
        fs::rename(tmp, self.index_path())?;
        Ok(())
    }

    /// All manifests sorted by (name, version).
    pub fn list(&self) -> Result<Vec<DatasetManifest>, RegistryError> {
        Ok(self.load_index()?.datasets)
    }

    /// The manifest of `name` at `version`, or its latest version.
    pub fn manifest(&self, name: &str, version: Option<u32>) -> Result<DatasetManifest, RegistryError> {
        let idx = self.load_index()?;
        let found = idx
            .datasets
            .into_iter()
            .filter(|m| m.name == name && version.is_none_or(|v| m.version == v))
            .max_by_key(|m| m.version);
        found.ok_or_else(|| RegistryError::UnknownDataset {
            name: name.to_string(),
            version: version.map_or("latest".to_string(), |v| v.to_string()),
        })
    }

    /// Registers `bytes` (a headered CSV) as the next version of `name`. The
    /// schema is inferred when not given.
    pub fn register_dataset(
        &self,
        name: &str,
        bytes: &[u8],
        schema: Option<&Schema>,
        parent: Option<DatasetRef>,
    ) -> Result<DatasetManifest, RegistryError> {
        self.register(name, bytes, schema, parent, None)
    }

    fn register(
        &self,
        name: &str,
        bytes: &[u8],
        schema: Option<&Schema>,
        parent: Option<DatasetRef>,
        view_config: Option<DataViewConfig>,
    ) -> Result<DatasetManifest, RegistryError> {
        if name.trim().is_empty() || name.contains('/') {
            return Err(RegistryError::BadName);
        }
        let table = Table::from_csv(bytes)?;
        let schema = match schema {
            Some(s) => {
                check_schema(&table, s)?;
                s.clone()
            }
            None => {
                let s = infer_schema(&table);
                check_schema(&table, &s)?;
                s
            }
        };
        let content_hash = sha256_hex(bytes);

        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(self.root.join(".lock"))?;
        lock.lock()?;

        let mut index = self.load_index()?;
        if let Some(p) = &parent {
            if !index.datasets.iter().any(|m| m.name == p.name && m.version == p.version) {
                return Err(RegistryError::UnknownParent {
                    name: p.name.clone(),
                    version: p.version,
                });
            }
        }
        let blob = self.blob_path(&content_hash);
        match fs::read(&blob) {
            Ok(existing) if existing != bytes => return Err(RegistryError::HashCollision(content_hash)),
            Ok(_) => {}
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                let tmp = blob.with_extension("tmp");
                let mut f = File::create(&tmp)?;
                f.write_all(bytes)?;
                f.sync_all()?;
                fs::rename(tmp, &blob)?;
            }
            Err(e) => return Err(e.into()),
        }
        let version = index
            .datasets
            .iter()
            .filter(|m| m.name == name)
            .map(|m| m.version)
            .max()
            .unwrap_or(0)
            + 1;
        let manifest = DatasetManifest {
            name: name.to_string(),
            version,
            content_hash,
            schema,
            columns: table.columns,
            rows: table.rows.len(),
            parent,
            view_config,
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        };
        index.datasets.push(manifest.clone());
        index.datasets.sort_by(|a, b| (&a.name, a.version).cmp(&(&b.name, b.version)));
        self.store_index(&index)?;
        drop(lock);
        Ok(manifest)
    }

    /// Stored bytes, verified against the content hash.
    pub fn read_bytes(&self, m: &DatasetManifest) -> Result<Vec<u8>, RegistryError> {
        let bytes = fs::read(self.blob_path(&m.content_hash))?;
        if sha256_hex(&bytes) != m.content_hash {
            return Err(RegistryError::HashMismatch {
                name: m.name.clone(),
                version: m.version,
                expected: m.content_hash.clone(),
            });
        }
        Ok(bytes)
    }

    pub fn read_table(&self, name: &str, version: Option<u32>) -> Result<(DatasetManifest, Table), RegistryError> {
        let m = self.manifest(name, version)?;
        let t = Table::from_csv(self.read_bytes(&m)?.as_slice())?;
        Ok((m, t))
    }

    /// Manifest chain from the root ancestor to `name@version`.
    pub fn lineage(&self, name: &str, version: u32) -> Result<Vec<DatasetManifest>, RegistryError> {
        let idx = self.load_index()?;
        let by_key: BTreeMap<(&str, u32), &DatasetManifest> =
            idx.datasets.iter().map(|m| ((m.name.as_str(), m.version), m)).collect();
        let mut chain = Vec::new();
        let mut seen = BTreeSet::new();
        let mut cur = Some((name.to_string(), version));
        while let Some((n, v)) = cur {
            let m = by_key.get(&(n.as_str(), v)).ok_or_else(|| {
                if chain.is_empty() {
                    RegistryError::UnknownDataset {
                        name: n.clone(),
                        version: v.to_string(),
                    }
                } else {
                    RegistryError::CorruptIndex(format!("dangling parent {n}@{v}"))
                }
            })?;
            if !seen.insert((n.clone(), v)) {
                return Err(RegistryError::CyclicLineage(format!("{name}@{version}")));
            }
            chain.push((*m).clone());
            cur = m.parent.as_ref().map(|p| (p.name.clone(), p.version));
        }
        chain.reverse();
        Ok(chain)
    }

    /// Runs a view over its source dataset and registers the result as
    /// `output_name`, with the source as parent and the config recorded.
    pub fn apply_view(
        &self,
        cfg: &DataViewConfig,
        output_name: &str,
        fetcher: &dyn SequenceFetcher,
    ) -> Result<(Table, DatasetManifest), RegistryError> {
        let (source, input) = self.read_table(&cfg.dataset_name, cfg.dataset_version)?;
        let out = run_view(cfg, &input, fetcher)?;
        let manifest = self.register(output_name, &out.to_csv(), None, Some(source.reference()), Some(cfg.clone()))?;
        Ok((out, manifest))
    }

    /// Lazily reads matching rows in batches of at most `chunk_size`.
    pub fn stream_dataset(
        &self,
        name: &str,
        version: Option<u32>,
        filter: Option<&str>,
        chunk_size: usize,
        gauge: Option<std::sync::Arc<RowGauge>>,
    ) -> Result<RowStream, RegistryError> {
        if chunk_size == 0 {
            return Err(RegistryError::BadChunkSize);
        }
        let m = self.manifest(name, version)?;
        let filter = Filter::compile(filter.unwrap_or(""), &m.columns)?;
        RowStream::open(self.blob_path(&m.content_hash), m, filter, chunk_size, gauge)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reg() -> (tempfile::TempDir, Registry) {
        let dir = tempfile::tempdir().unwrap();
        let r = Registry::open(dir.path()).unwrap();
        (dir, r)
    }

    const CSV: &[u8] = b"entity,context,label\ne1,c1,1\ne2,c1,0\n";

    #[test]
    fn versions_and_hashes() {
        let (_d, r) = reg();
        let a = r.register_dataset("toy", CSV, None, None).unwrap();
        let b = r.register_dataset("toy", CSV, None, None).unwrap();
        assert_eq!((a.version, b.version), (1, 2));
        assert_eq!(a.content_hash, b.content_hash);
        assert_eq!(a.schema["label"], ColumnType::Integer);
        assert_eq!(r.manifest("toy", None).unwrap().version, 2);
        assert_eq!(r.list().unwrap().len(), 2);
    }

    #[test]
    fn unknown_parent_and_schema_mismatch() {
        let (_d, r) = reg();
        r.register_dataset("x", CSV, None, None).unwrap();
        r.register_dataset("x", CSV, None, None).unwrap();
        let e = r.register_dataset("y", CSV, None, Some(DatasetRef::new("x", 3))).unwrap_err();
        assert!(matches!(e, RegistryError::UnknownParent { version: 3, .. }));
        let mut schema = infer_schema(&Table::from_csv(CSV).unwrap());
        schema.insert("extra".into(), ColumnType::Text);
        assert!(matches!(r.register_dataset("z", CSV, Some(&schema), None), Err(RegistryError::SchemaMismatch(_))));
        schema.remove("extra");
        schema.insert("entity".into(), ColumnType::Number);
        assert!(matches!(r.register_dataset("z", CSV, Some(&schema), None), Err(RegistryError::SchemaMismatch(_))));
    }

    #[test]
    fn lineage_and_tamper_detection() {
        let (_d, r) = reg();
        let root = r.register_dataset("x", CSV, None, None).unwrap();
        let child = r
            .register_dataset("x_view", b"entity\ne1\n", None, Some(root.reference()))
            .unwrap();
        assert_eq!(r.lineage("x", 1).unwrap().len(), 1);
        let chain = r.lineage("x_view", child.version).unwrap();
        assert_eq!(chain.iter().map(|m| m.name.as_str()).collect::<Vec<_>>(), ["x", "x_view"]);
        fs::write(r.blob_path(&root.content_hash), b"entity,context,label\ne1,c1,0\n").unwrap();
        assert!(matches!(r.read_table("x", Some(1)), Err(RegistryError::HashMismatch { .. })));
        assert!(matches!(r.lineage("nope", 1), Err(RegistryError::UnknownDataset { .. })));
    }

    #[test]
    fn infer_types() {
        let t = Table::from_csv("a,b,c\n1,1.5,x\n,2,\n".as_bytes()).unwrap();
        let s = infer_schema(&t);
        assert_eq!(
            s.values().copied().collect::<Vec<_>>(),
            [ColumnType::Integer, ColumnType::Number, ColumnType::Text]
        );
    }
}
