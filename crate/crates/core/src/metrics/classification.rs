use serde::{Deserialize, Serialize};

use super::rank::{auroc, average_precision};
use super::{check_inputs, MetricError};
use crate::Label;

/// Thresholded and rank metrics on one score/label set. Rank metrics are
/// `None` when the labels hold a single class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSuite {
    pub acc: f64,
    pub f1: f64,
    pub auroc: Option<f64>,
    pub auprc: Option<f64>,
}

/// A score at or above `threshold` is a positive prediction.
pub fn classification_suite(
    scores: &[f64],
    labels: &[Label],
    threshold: f64,
) -> Result<ClassificationSuite, MetricError> {
    check_inputs(scores, labels)?;
    if !(0.0..=1.0).contains(&threshold) {
        return Err(MetricError::InvalidThreshold(threshold));
    }
    if scores.is_empty() {
        return Err(MetricError::EmptySlice);
    }
    let (mut tp, mut fp, mut tn, mut fneg) = (0usize, 0usize, 0usize, 0usize);
    for (&s, l) in scores.iter().zip(labels) {
        match (s >= threshold, l.is_positive()) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fneg += 1,
        }
    }
    let acc = (tp + tn) as f64 / scores.len() as f64;
    let f1_den = 2 * tp + fp + fneg;
    let f1 = if f1_den == 0 {
        0.0
    } else {
        (2 * tp) as f64 / f1_den as f64
    };
    Ok(ClassificationSuite {
        acc,
        f1,
        auroc: auroc(scores, labels).ok(),
        auprc: average_precision(scores, labels).ok(),
    })
}
