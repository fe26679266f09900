use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::rank::{ap_at_r_ranked, auroc, rank_order};
use super::MetricError;
use crate::rng::{stream_id, SeededRng};
use crate::{ContextId, ContextSample, EntityId, Label, PredictionSet};

/// Scored samples of one context, ordered by entity id.
#[derive(Clone, Debug, PartialEq)]
pub struct Slice {
    pub context: ContextId,
    pub entities: Vec<EntityId>,
    pub scores: Vec<f64>,
    pub labels: Vec<Label>,
}

impl Slice {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|l| l.is_positive()).count()
    }

    /// AUROC of the slice, `None` when it holds a single class.
    pub fn auroc(&self) -> Option<f64> {
        auroc(&self.scores, &self.labels).ok()
    }

    /// AP@R with ties broken by the stream derived from `(seed, context)`.
    pub fn ap_at_r(&self, r: usize, seed: u64) -> f64 {
        let mut rng = SeededRng::with_stream(seed, stream_id(self.context.as_str()));
        let ranked: Vec<Label> = rank_order(&self.scores, &mut rng)
            .into_iter()
            .map(|i| self.labels[i])
            .collect();
        ap_at_r_ranked(&ranked, r)
    }
}

/// Predictions joined to held-out labels and grouped by context.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextSlices {
    slices: Vec<Slice>,
}

/// Stream id reserved for the pooled (all contexts) ranking.
const POOLED_STREAM: u64 = u64::MAX;

impl ContextSlices {
    /// Every sample must have a prediction and every prediction must match a
    /// sample; missing keys are reported before unknown ones.
    pub fn join(preds: &PredictionSet, samples: &[ContextSample]) -> Result<Self, MetricError> {
        let mut by_key: BTreeMap<(&EntityId, &ContextId), f64> = BTreeMap::new();
        for r in preds.rows() {
            by_key.insert((&r.entity, &r.context), r.score);
        }
        let mut missing = 0;
        let mut scored = Vec::with_capacity(samples.len());
        for s in samples {
            match by_key.remove(&(&s.entity, &s.context)) {
                Some(score) => scored.push((s.clone(), score)),
                None => missing += 1,
            }
        }
        if missing > 0 {
            return Err(MetricError::MissingPredictions(missing));
        }
        if !by_key.is_empty() {
            return Err(MetricError::UnknownKeys(by_key.len()));
        }
        Ok(Self::from_scored(scored))
    }

    pub fn from_scored(rows: impl IntoIterator<Item = (ContextSample, f64)>) -> Self {
        let mut grouped: BTreeMap<ContextId, Vec<(EntityId, f64, Label)>> = BTreeMap::new();
        for (s, score) in rows {
            grouped.entry(s.context).or_default().push((s.entity, score, s.label));
        }
        let slices = grouped
            .into_iter()
            .map(|(context, mut rows)| {
                rows.sort_by(|a, b| a.0.cmp(&b.0));
                let mut slice = Slice {
                    context,
                    entities: Vec::with_capacity(rows.len()),
                    scores: Vec::with_capacity(rows.len()),
                    labels: Vec::with_capacity(rows.len()),
                };
                for (e, s, l) in rows {
                    slice.entities.push(e);
                    slice.scores.push(s);
                    slice.labels.push(l);
                }
                slice
            })
            .collect();
        Self { slices }
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }

    /// All samples concatenated in (context, entity) order.
    pub fn pooled(&self) -> (Vec<f64>, Vec<Label>) {
        let scores = self.slices.iter().flat_map(|s| s.scores.iter().copied()).collect();
        let labels = self.slices.iter().flat_map(|s| s.labels.iter().copied()).collect();
        (scores, labels)
    }

    /// AP@R of the pooled ranking; ties broken by a stream of its own.
    pub fn pooled_ap_at_r(&self, r: usize, seed: u64) -> f64 {
        let (scores, labels) = self.pooled();
        let mut rng = SeededRng::with_stream(seed, POOLED_STREAM);
        let ranked: Vec<Label> = rank_order(&scores, &mut rng).into_iter().map(|i| labels[i]).collect();
        ap_at_r_ranked(&ranked, r)
    }

    /// Sample-weighted mean AUROC over the K best contexts. Single-class
    /// contexts are excluded before selection.
    pub fn auroc_topk(&self, k: usize) -> Result<f64, MetricError> {
        let candidates: Vec<(&ContextId, usize, f64)> = self
            .slices
            .iter()
            .filter_map(|s| s.auroc().map(|a| (&s.context, s.len(), a)))
            .collect();
        let top = select_top_k(candidates, k)?;
        let num: f64 = top.iter().map(|(_, n, a)| a * *n as f64).sum();
        let den: usize = top.iter().map(|(_, n, _)| n).sum();
        Ok(num / den as f64)
    }

    /// Unweighted mean AP@R over the K best contexts among those with at
    /// least one positive.
    pub fn ap_at_r_topk(&self, r: usize, k: usize, seed: u64) -> Result<f64, MetricError> {
        if r == 0 {
            return Err(MetricError::InvalidRank);
        }
        let candidates: Vec<(&ContextId, usize, f64)> = self
            .slices
            .iter()
            .filter(|s| s.positives() > 0)
            .map(|s| (&s.context, s.len(), s.ap_at_r(r, seed)))
            .collect();
        let top = select_top_k(candidates, k)?;
        Ok(top.iter().map(|(_, _, v)| v).sum::<f64>() / top.len() as f64)
    }
}

/// Sort `(context, size, value)` by value descending, then size descending,
/// then context id, and keep the first `k`.
pub fn select_top_k<'a>(
    mut candidates: Vec<(&'a ContextId, usize, f64)>,
    k: usize,
) -> Result<Vec<(&'a ContextId, usize, f64)>, MetricError> {
    if k == 0 {
        return Err(MetricError::InvalidTopK);
    }
    if k > candidates.len() {
        return Err(MetricError::NotEnoughContexts {
            k,
            available: candidates.len(),
        });
    }
    candidates.sort_by(|a, b| {
        b.2.total_cmp(&a.2)
            .then_with(|| b.1.cmp(&a.1))
            .then_with(|| a.0.cmp(b.0))
    });
    candidates.truncate(k);
    Ok(candidates)
}

/// Context-sliced AUROC aggregated over the top `k` contexts, together with
/// the per-context slice reports it was computed from.
pub fn context_auroc_topk(
    preds: &PredictionSet,
    samples: &[ContextSample],
    k: usize,
) -> Result<(f64, Vec<super::ContextSliceReport>), MetricError> {
    let slices = ContextSlices::join(preds, samples)?;
    let value = slices.auroc_topk(k)?;
    let reports = slices
        .slices()
        .iter()
        .map(|s| super::ContextSliceReport::from_slice(s, &[], 0))
        .collect();
    Ok((value, reports))
}

pub fn context_ap_at_r_topk(
    preds: &PredictionSet,
    samples: &[ContextSample],
    r: usize,
    k: usize,
    seed: u64,
) -> Result<f64, MetricError> {
    ContextSlices::join(preds, samples)?.ap_at_r_topk(r, k, seed)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContextFree {
    pub auroc: f64,
    pub ap_at_r: f64,
}

/// AUROC and AP@R over all contexts pooled together.
pub fn context_free_suite(
    preds: &PredictionSet,
    samples: &[ContextSample],
    r: usize,
    seed: u64,
) -> Result<ContextFree, MetricError> {
    if r == 0 {
        return Err(MetricError::InvalidRank);
    }
    let slices = ContextSlices::join(preds, samples)?;
    let (scores, labels) = slices.pooled();
    let auroc = auroc(&scores, &labels)?;
    Ok(ContextFree {
        auroc,
        ap_at_r: slices.pooled_ap_at_r(r, seed),
    })
}
