use std::fs::File;
use std::io::{BufReader, Read};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::{DatasetManifest, Filter, RegistryError};
use crate::io::csv_error;

/// Counts rows currently held by a stream and its live batches, and the
/// highest count seen.
#[derive(Debug, Default)]
pub struct RowGauge {
    resident: AtomicUsize,
    peak: AtomicUsize,
}

impl RowGauge {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    fn add(&self, n: usize) {
        let now = self.resident.fetch_add(n, Ordering::SeqCst) + n;
        self.peak.fetch_max(now, Ordering::SeqCst);
    }

    fn sub(&self, n: usize) {
        self.resident.fetch_sub(n, Ordering::SeqCst);
    }

    pub fn resident(&self) -> usize {
        self.resident.load(Ordering::SeqCst)
    }

    pub fn peak(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }
}

/// A batch of rows. Dropping it releases its rows from the gauge.
#[derive(Debug)]
pub struct RowBatch {
    pub columns: Arc<[String]>,
    pub rows: Vec<Vec<String>>,
    gauge: Option<Arc<RowGauge>>,
}

impl Drop for RowBatch {
    fn drop(&mut self) {
        if let Some(g) = &self.gauge {
            g.sub(self.rows.len());
        }
    }
}

/// Hashes everything read through it.
struct HashingReader<R> {
    inner: R,
    hasher: Sha256,
}

impl<R: Read> Read for HashingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }
}

/// Lazy reader over one stored dataset. Rows are parsed one at a time; only
/// the batch being filled is held. The content hash is checked when the
/// blob is exhausted, and a mismatch is reported as the final item.
pub struct RowStream {
    reader: csv::Reader<HashingReader<BufReader<File>>>,
    manifest: DatasetManifest,
    columns: Arc<[String]>,
    filter: Filter,
    chunk_size: usize,
    gauge: Option<Arc<RowGauge>>,
    record: csv::StringRecord,
    done: bool,
}

impl RowStream {
    pub(super) fn open(
        path: PathBuf,
        manifest: DatasetManifest,
        filter: Filter,
        chunk_size: usize,
        gauge: Option<Arc<RowGauge>>,
    ) -> Result<Self, RegistryError> {
        let file = HashingReader {
            inner: BufReader::new(File::open(path)?),
            hasher: Sha256::new(),
        };
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
        let header: Vec<String> = reader.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
        if header != manifest.columns {
            return Err(RegistryError::HashMismatch {
                name: manifest.name.clone(),
                version: manifest.version,
                expected: manifest.content_hash.clone(),
            });
        }
        Ok(Self {
            reader,
            columns: header.into(),
            manifest,
            filter,
            chunk_size,
            gauge,
            record: csv::StringRecord::new(),
            done: false,
        })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    /// Next row passing the filter, without batching.
    pub fn next_row(&mut self) -> Option<Result<Vec<String>, RegistryError>> {
        if self.done {
            return None;
        }
        loop {
            match self.reader.read_record(&mut self.record) {
                Ok(true) => {
                    let row: Vec<String> = self.record.iter().map(str::to_string).collect();
                    if self.filter.matches(&row) {
                        return Some(Ok(row));
                    }
                }
                Ok(false) => {
                    self.done = true;
                    let digest = hex::encode(self.reader.get_ref().hasher.clone().finalize());
                    if digest != self.manifest.content_hash {
                        return Some(Err(RegistryError::HashMismatch {
                            name: self.manifest.name.clone(),
                            version: self.manifest.version,
                            expected: self.manifest.content_hash.clone(),
                        }));
                    }
                    return None;
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(csv_error(e).into()));
                }
            }
        }
    }
}

impl Iterator for RowStream {
    type Item = Result<RowBatch, RegistryError>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut batch = RowBatch {
            columns: self.columns.clone(),
            rows: Vec::with_capacity(self.chunk_size.min(4096)),
            gauge: self.gauge.clone(),
        };
        while batch.rows.len() < self.chunk_size {
            match self.next_row() {
                Some(Ok(row)) => {
                    if let Some(g) = &self.gauge {
                        g.add(1);
                    }
                    batch.rows.push(row);
                }
                Some(Err(e)) => return Some(Err(e)),
                None => break,
            }
        }
        if batch.rows.is_empty() {
            None
        } else {
            Some(Ok(batch))
        }
    }
}
