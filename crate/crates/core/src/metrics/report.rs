use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::classification::classification_suite;
use super::context::{ContextSlices, Slice};
use super::rank::auroc;
use super::MetricError;
use crate::ContextId;

/// Which cutoffs a benchmark reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSuite {
    /// AP@R cutoffs.
    pub ranks: Vec<u32>,
    /// Top-K context counts.
    pub top_k: Vec<u32>,
    /// Decision threshold for accuracy and F1.
    pub threshold: f64,
}

impl Default for MetricSuite {
    fn default() -> Self {
        Self {
            ranks: alloc::vec![5, 20],
            top_k: alloc::vec![1, 10, 20, 50],
            threshold: 0.5,
        }
    }
}

impl MetricSuite {
    pub fn validate(&self) -> Result<(), MetricError> {
        if self.ranks.contains(&0) {
            return Err(MetricError::InvalidRank);
        }
        if self.top_k.contains(&0) {
            return Err(MetricError::InvalidTopK);
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(MetricError::InvalidThreshold(self.threshold));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextSliceReport {
    pub context: ContextId,
    pub n_samples: usize,
    pub n_positives: usize,
    pub auroc: Option<f64>,
    /// AP@R keyed by R; `None` when the slice has no positives.
    pub ap_at_r: BTreeMap<u32, Option<f64>>,
}

impl ContextSliceReport {
    pub fn from_slice(slice: &Slice, ranks: &[u32], seed: u64) -> Self {
        let n_positives = slice.positives();
        Self {
            context: slice.context.clone(),
            n_samples: slice.len(),
            n_positives,
            auroc: slice.auroc(),
            ap_at_r: ranks
                .iter()
                .map(|&r| (r, (n_positives > 0).then(|| slice.ap_at_r(r as usize, seed))))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextFreeReport {
    pub auroc: Option<f64>,
    pub ap_at_r: BTreeMap<u32, Option<f64>>,
    pub auprc: Option<f64>,
    pub acc: f64,
    pub f1: f64,
}

/// Everything a benchmark evaluation reports for one seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub per_context: Vec<ContextSliceReport>,
    /// Sample-weighted AUROC over the top K contexts, keyed by K. `None` when
    /// fewer than K contexts have both classes.
    pub topk_auroc: BTreeMap<u32, Option<f64>>,
    /// Mean AP@R over the top K contexts, keyed by R then K.
    pub topk_ap_at_r: BTreeMap<u32, BTreeMap<u32, Option<f64>>>,
    pub context_free: ContextFreeReport,
    pub seed: u64,
}

/// Computes the full suite on joined slices. `seed` drives AP@R tie breaks.
pub fn evaluate(slices: &ContextSlices, suite: &MetricSuite, seed: u64) -> Result<MetricReport, MetricError> {
    suite.validate()?;
    let (scores, labels) = slices.pooled();
    if scores.is_empty() {
        return Err(MetricError::EmptySlice);
    }
    let per_context = slices
        .slices()
        .iter()
        .map(|s| ContextSliceReport::from_slice(s, &suite.ranks, seed))
        .collect();
    let topk_auroc = suite
        .top_k
        .iter()
        .map(|&k| (k, slices.auroc_topk(k as usize).ok()))
        .collect();
    let topk_ap_at_r = suite
        .ranks
        .iter()
        .map(|&r| {
            let by_k = suite
                .top_k
                .iter()
                .map(|&k| (k, slices.ap_at_r_topk(r as usize, k as usize, seed).ok()))
                .collect();
            (r, by_k)
        })
        .collect();
    let cls = classification_suite(&scores, &labels, suite.threshold)?;
    let has_pos = labels.iter().any(|l| l.is_positive());
    let context_free = ContextFreeReport {
        auroc: auroc(&scores, &labels).ok(),
        ap_at_r: suite
            .ranks
            .iter()
            .map(|&r| (r, has_pos.then(|| slices.pooled_ap_at_r(r as usize, seed))))
            .collect(),
        auprc: cls.auprc,
        acc: cls.acc,
        f1: cls.f1,
    };
    Ok(MetricReport {
        per_context,
        topk_auroc,
        topk_ap_at_r,
        context_free,
        seed,
    })
}

/// Flat `name -> value` view of a report, used for seed aggregation and
/// leaderboards. Undefined values are left out.
pub trait NamedMetrics {
    fn named_metrics(&self) -> BTreeMap<String, f64>;
}

impl NamedMetrics for MetricReport {
    fn named_metrics(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        for (k, v) in &self.topk_auroc {
            if let Some(v) = v {
                m.insert(format!("auroc_top{k}"), *v);
            }
        }
        for (r, by_k) in &self.topk_ap_at_r {
            for (k, v) in by_k {
                if let Some(v) = v {
                    m.insert(format!("ap@{r}_top{k}"), *v);
                }
            }
        }
        let cf = &self.context_free;
        if let Some(v) = cf.auroc {
            m.insert("auroc_cf".to_string(), v);
        }
        for (r, v) in &cf.ap_at_r {
            if let Some(v) = v {
                m.insert(format!("ap@{r}_cf"), *v);
            }
        }
        if let Some(v) = cf.auprc {
            m.insert("auprc_cf".to_string(), v);
        }
        m.insert("acc_cf".to_string(), cf.acc);
        m.insert("f1_cf".to_string(), cf.f1);
        m
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedAggregate {
    pub metric: String,
    pub mean: f64,
    /// Population (n-denominator) standard deviation.
    pub std: f64,
    pub n_seeds: usize,
}

/// Per-metric mean and population standard deviation across seeds. All
/// reports must define the same metric names.
pub fn aggregate_seeds<R: NamedMetrics>(reports: &[R]) -> Result<Vec<SeedAggregate>, MetricError> {
    let first = reports.first().ok_or(MetricError::NoReports)?.named_metrics();
    let mut columns: BTreeMap<String, Vec<f64>> = first.into_iter().map(|(k, v)| (k, alloc::vec![v])).collect();
    for (index, r) in reports.iter().enumerate().skip(1) {
        let m = r.named_metrics();
        if m.len() != columns.len() || !m.keys().all(|k| columns.contains_key(k)) {
            return Err(MetricError::KeyMismatch { index });
        }
        for (k, v) in m {
            columns.get_mut(&k).expect("checked above").push(v);
        }
    }
    Ok(columns
        .into_iter()
        .map(|(metric, values)| {
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            SeedAggregate {
                metric,
                mean,
                std: Float::sqrt(var),
                n_seeds: values.len(),
            }
        })
        .collect())
}
