//! Append-only leaderboards, one JSON-lines file per group under
//! `<data_dir>/leaderboards/`.
//!
//! Every accepted evaluation appends an entry. An entry's aggregates cover
//! all seeds submitted so far under its submission id, using the most recent
//! report for each seed. The board shows the newest entry per submission.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use ctxbench_core::metrics::{aggregate_seeds, NamedMetrics, SeedAggregate};
use ctxbench_core::MetricReport;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub group_id: String,
    pub submission_id: String,
    pub submitted_at: String,
    /// Seed of the report that produced this entry.
    pub seed: u64,
    pub report: MetricReport,
    pub aggregates: Vec<SeedAggregate>,
    pub n_seeds: usize,
    pub primary_metric: String,
    pub primary_mean: Option<f64>,
}

/// Restricts a report's named metrics to a shared key set, so seeds that
/// leave different metrics undefined can still be aggregated.
struct Restricted<'a> {
    report: &'a MetricReport,
    keys: &'a [String],
}

impl NamedMetrics for Restricted<'_> {
    fn named_metrics(&self) -> BTreeMap<String, f64> {
        let mut m = self.report.named_metrics();
        m.retain(|k, _| self.keys.contains(k));
        m
    }
}

/// Mean and population std per metric defined in every report.
pub fn aggregate_common(reports: &[&MetricReport]) -> Vec<SeedAggregate> {
    let Some(first) = reports.first() else {
        return Vec::new();
    };
    let keys: Vec<String> = first
        .named_metrics()
        .into_keys()
        .filter(|k| reports.iter().all(|r| r.named_metrics().contains_key(k)))
        .collect();
    if keys.is_empty() {
        return Vec::new();
    }
    let restricted: Vec<Restricted> = reports.iter().map(|r| Restricted { report: r, keys: &keys }).collect();
    aggregate_seeds(&restricted).expect("identical key sets")
}

pub struct Leaderboards {
    dir: PathBuf,
    append: Mutex<()>,
}

impl Leaderboards {
    pub fn open(data_dir: &Path) -> std::io::Result<Self> {
        let dir = data_dir.join("leaderboards");
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            append: Mutex::new(()),
        })
    }

    fn path(&self, group_id: &str) -> PathBuf {
        self.dir.join(format!("{group_id}.jsonl"))
    }

    /// Every entry in append order.
    pub fn entries(&self, group_id: &str) -> std::io::Result<Vec<LeaderboardEntry>> {
        let file = match fs::File::open(self.path(group_id)) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e),
        };
        let mut out = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str(&line).map_err(std::io::Error::other)?);
        }
        Ok(out)
    }

    /// Appends an entry for `report` and returns it.
    pub fn record(
        &self,
        group_id: &str,
        submission_id: &str,
        primary_metric: &str,
        report: &MetricReport,
    ) -> std::io::Result<LeaderboardEntry> {
        let _guard = self.append.lock().unwrap_or_else(|p| p.into_inner());
        let path = self.path(group_id);
        let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
        file.lock()?;
        let mut latest: BTreeMap<u64, MetricReport> = BTreeMap::new();
        for e in self.entries(group_id)? {
            if e.submission_id == submission_id {
                latest.insert(e.seed, e.report);
            }
        }
        latest.insert(report.seed, report.clone());
        let reports: Vec<&MetricReport> = latest.values().collect();
        let aggregates = aggregate_common(&reports);
        let primary_mean = aggregates.iter().find(|a| a.metric == primary_metric).map(|a| a.mean);
        let entry = LeaderboardEntry {
            group_id: group_id.to_string(),
            submission_id: submission_id.to_string(),
            submitted_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Nanos, true),
            seed: report.seed,
            report: report.clone(),
            n_seeds: reports.len(),
            aggregates,
            primary_metric: primary_metric.to_string(),
            primary_mean,
        };
        let mut line = serde_json::to_vec(&entry).map_err(std::io::Error::other)?;
        line.push(b'\n');
        file.write_all(&line)?;
        file.sync_data()?;
        Ok(entry)
    }

    /// Newest entry per submission, best primary mean first; ties go to the
    /// earlier submission, then to file order. Entries without a primary
    /// value sort last.
    pub fn board(&self, group_id: &str) -> std::io::Result<Vec<LeaderboardEntry>> {
        let mut newest: BTreeMap<String, (usize, LeaderboardEntry)> = BTreeMap::new();
        for (i, e) in self.entries(group_id)?.into_iter().enumerate() {
            newest.insert(e.submission_id.clone(), (i, e));
        }
        let mut rows: Vec<(usize, LeaderboardEntry)> = newest.into_values().collect();
        rows.sort_by(|(ia, a), (ib, b)| {
            let key = |e: &LeaderboardEntry| e.primary_mean.unwrap_or(f64::NEG_INFINITY);
            key(b)
                .total_cmp(&key(a))
                .then_with(|| a.submitted_at.cmp(&b.submitted_at))
                .then(ia.cmp(ib))
        });
        Ok(rows.into_iter().map(|(_, e)| e).collect())
    }
}
