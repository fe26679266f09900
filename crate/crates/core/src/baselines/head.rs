use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use alloc::format;

use serde::{Deserialize, Serialize};

use super::embedding::EmbeddingTable;
use super::skipgram::{sigmoid, softplus};
use super::BaselineError;
use crate::metrics::auroc;
use crate::splits::{Fold, SplitKind, SplitSpec};
use crate::{ContextId, ContextSample, EntityId, Label, PredictionRow, PredictionSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeadConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// L2 penalty on the weights (not the bias).
    pub l2: f64,
    /// Stop after this many epochs without a validation AUROC improvement.
    pub patience: usize,
}

impl Default for HeadConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            learning_rate: 0.5,
            l2: 1e-4,
            patience: 50,
        }
    }
}

/// Logistic model on `[embedding ‖ one-hot(context)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearHead {
    /// Embedding weights followed by one weight per context.
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Context order of the one-hot block.
    pub contexts: Vec<ContextId>,
    /// Split the head was fit on, as `kind/seed`.
    pub trained_on: String,
}

impl LinearHead {
    pub fn zeros(embedding_dim: usize, contexts: Vec<ContextId>) -> Self {
        Self {
            weights: vec![0.0; embedding_dim + contexts.len()],
            bias: 0.0,
            contexts,
            trained_on: String::new(),
        }
    }

    pub fn embedding_dim(&self) -> usize {
        self.weights.len() - self.contexts.len()
    }

    /// Writes the feature row of `(entity, context)` into `out`.
    pub fn features_into(
        &self,
        emb: &EmbeddingTable,
        entity: &str,
        context: &str,
        out: &mut Vec<f64>,
    ) -> Result<(), BaselineError> {
        let v = emb.get(entity).ok_or_else(|| BaselineError::MissingEmbedding(entity.to_string()))?;
        if v.len() != self.embedding_dim() {
            return Err(BaselineError::DimMismatch {
                expected: self.embedding_dim(),
                found: v.len(),
            });
        }
        let c = self
            .contexts
            .iter()
            .position(|c| c.as_str() == context)
            .ok_or_else(|| BaselineError::UnknownContext(context.to_string()))?;
        out.clear();
        out.extend_from_slice(v);
        out.extend((0..self.contexts.len()).map(|i| if i == c { 1.0 } else { 0.0 }));
        Ok(())
    }

    pub fn score_features(&self, x: &[f64]) -> f64 {
        sigmoid(linear(&self.weights, self.bias, x))
    }
}

fn linear(w: &[f64], b: f64, x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b
}

/// Mean logistic loss plus `l2 / 2 * |w|^2` over row-major `features`
/// (`labels.len()` rows), with its gradient in `grad_w` and the returned bias
/// gradient.
pub fn head_loss_grad(
    weights: &[f64],
    bias: f64,
    features: &[f64],
    labels: &[f64],
    l2: f64,
    grad_w: &mut [f64],
) -> (f64, f64) {
    let d = weights.len();
    let n = labels.len() as f64;
    grad_w.iter_mut().for_each(|g| *g = 0.0);
    let mut grad_b = 0.0;
    let mut loss = 0.0;
    for (x, &y) in features.chunks_exact(d).zip(labels) {
        let z = linear(weights, bias, x);
        // y * softplus(-z) + (1 - y) * softplus(z)
        loss += y * softplus(-z) + (1.0 - y) * softplus(z);
        let r = sigmoid(z) - y;
        for (g, xi) in grad_w.iter_mut().zip(x) {
            *g += r * xi;
        }
        grad_b += r;
    }
    loss /= n;
    grad_b /= n;
    let mut penalty = 0.0;
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g = *g / n + l2 * w;
        penalty += w * w;
    }
    (loss + 0.5 * l2 * penalty, grad_b)
}

struct Design {
    features: Vec<f64>,
    labels: Vec<f64>,
}

fn design(head: &LinearHead, emb: &EmbeddingTable, samples: &[&ContextSample]) -> Result<Design, BaselineError> {
    let mut features = Vec::with_capacity(samples.len() * head.weights.len());
    let mut row = Vec::with_capacity(head.weights.len());
    for s in samples {
        head.features_into(emb, s.entity.as_str(), s.context.as_str(), &mut row)?;
        features.extend_from_slice(&row);
    }
    Ok(Design {
        features,
        labels: samples.iter().map(|s| s.label.as_f64()).collect(),
    })
}

fn kind_name(kind: SplitKind) -> &'static str {
    match kind {
        SplitKind::Cold => "cold",
        SplitKind::Temporal => "temporal",
        SplitKind::Stratified => "stratified",
        SplitKind::Random => "random",
    }
}

/// Full-batch gradient descent from zero weights on the train fold. After
/// every epoch the validation AUROC is measured and the best head so far
/// (earliest on ties) is kept; without a two-class validation fold the last
/// head is returned.
///
/// Embedding columns are standardized with train-fold statistics during
/// fitting (the L2 penalty applies to the standardized weights); the returned
/// head has the scaling folded back in and scores raw embeddings.
pub fn train_linear_head(
    emb: &EmbeddingTable,
    samples: &[ContextSample],
    split: &SplitSpec,
    contexts: &[ContextId],
    cfg: &HeadConfig,
) -> Result<LinearHead, BaselineError> {
    if !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
        return Err(BaselineError::InvalidConfig("learning_rate"));
    }
    if !(cfg.l2.is_finite() && cfg.l2 >= 0.0) {
        return Err(BaselineError::InvalidConfig("l2"));
    }
    let mut head = LinearHead::zeros(emb.dim(), contexts.to_vec());
    head.trained_on = format!("{}/{}", kind_name(split.kind), split.seed);
    let train = split.select(samples, Fold::Train);
    if train.is_empty() {
        return Err(BaselineError::NoTrainingSamples);
    }
    let mut train = design(&head, emb, &train)?;
    let valid = split.select(samples, Fold::Valid);
    let valid_labels: Vec<Label> = valid.iter().map(|s| s.label).collect();
    let mut valid = design(&head, emb, &valid)?;
    let d = head.weights.len();
    let scaling = Scaling::fit(&train.features, d, emb.dim());
    scaling.apply(&mut train.features);
    scaling.apply(&mut valid.features);
    let valid_auroc = |h: &LinearHead| {
        let scores: Vec<f64> = valid.features.chunks_exact(d).map(|x| h.score_features(x)).collect();
        auroc(&scores, &valid_labels).ok()
    };

    let mut best = valid_auroc(&head).map(|a| (a, head.clone()));
    let mut since_best = 0;
    let mut grad = vec![0.0; d];
    for _ in 0..cfg.epochs {
        let (_, grad_b) = head_loss_grad(&head.weights, head.bias, &train.features, &train.labels, cfg.l2, &mut grad);
        for (w, g) in head.weights.iter_mut().zip(&grad) {
            *w -= cfg.learning_rate * g;
        }
        head.bias -= cfg.learning_rate * grad_b;
        if let Some((best_auroc, best_head)) = best.as_mut() {
            let a = valid_auroc(&head).unwrap_or(f64::NEG_INFINITY);
            if a > *best_auroc {
                *best_auroc = a;
                *best_head = head.clone();
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= cfg.patience {
                    break;
                }
            }
        }
    }
    let mut fitted = match best {
        Some((_, h)) => h,
        None => head,
    };
    scaling.fold_into(&mut fitted);
    Ok(fitted)
}

/// Per-column affine standardization of the leading embedding columns.
struct Scaling {
    mean: Vec<f64>,
    scale: Vec<f64>,
    width: usize,
}

impl Scaling {
    fn fit(features: &[f64], width: usize, columns: usize) -> Self {
        let rows = (features.len() / width.max(1)).max(1) as f64;
        let mut mean = vec![0.0; columns];
        let mut var = vec![0.0; columns];
        for x in features.chunks_exact(width) {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v / rows;
            }
        }
        for x in features.chunks_exact(width) {
            for ((s, m), v) in var.iter_mut().zip(&mean).zip(x) {
                *s += (v - m) * (v - m) / rows;
            }
        }
        // constant columns are centered but not rescaled
        let scale = var
            .iter()
            .map(|&v| {
                let sd = num_traits::Float::sqrt(v);
                if sd > 1e-12 { sd } else { 1.0 }
            })
            .collect();
        Self { mean, scale, width }
    }

    fn apply(&self, features: &mut [f64]) {
        for x in features.chunks_exact_mut(self.width) {
            for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
    }

    /// Rewrites a head fit on standardized columns to score raw ones.
    fn fold_into(&self, head: &mut LinearHead) {
        for ((w, m), s) in head.weights.iter_mut().zip(&self.mean).zip(&self.scale) {
            *w /= s;
            head.bias -= *w * m;
        }
    }
}

/// Scores for arbitrary pairs, duplicates allowed.
pub fn score_pairs(
    head: &LinearHead,
    emb: &EmbeddingTable,
    pairs: &[(EntityId, ContextId)],
) -> Result<Vec<f64>, BaselineError> {
    let mut row = Vec::with_capacity(head.weights.len());
    pairs
        .iter()
        .map(|(e, c)| {
            head.features_into(emb, e.as_str(), c.as_str(), &mut row)?;
            Ok(head.score_features(&row))
        })
        .collect()
}

/// `σ(w·x + b)` per pair. A repeated pair is reported once.
pub fn predict_scores(
    head: &LinearHead,
    emb: &EmbeddingTable,
    pairs: &[(EntityId, ContextId)],
    dataset_ref: &str,
) -> Result<PredictionSet, BaselineError> {
    let scores = score_pairs(head, emb, pairs)?;
    let mut seen = alloc::collections::BTreeSet::new();
    let mut rows = Vec::with_capacity(pairs.len());
    for ((e, c), s) in pairs.iter().zip(scores) {
        if seen.insert((e, c)) {
            rows.push(PredictionRow::new(e.clone(), c.clone(), s)?);
        }
    }
    Ok(PredictionSet::new(dataset_ref, rows)?)
}
