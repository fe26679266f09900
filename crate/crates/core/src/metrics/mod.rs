//! Ranking and classification metrics, context-sliced top-K aggregates and
//! perturbation-response metrics.
//!
//! Tie conventions:
//! * AUROC uses average ranks, so it depends only on the score order.
//! * Step-wise average precision (AUPRC) treats a run of tied scores as one
//!   threshold.
//! * AP@R needs a strict order to cut the top R. Items are first shuffled with
//!   a seeded stream and then stably sorted by descending score, so ties are
//!   broken independently of the labels and reproducibly.

mod classification;
mod context;
mod perturbation;
mod rank;
mod report;

use alloc::string::String;

pub use classification::{classification_suite, ClassificationSuite};
pub use context::{
    context_ap_at_r_topk, context_auroc_topk, context_free_suite, select_top_k, ContextFree,
    ContextSlices, Slice,
};
pub use perturbation::{
    evaluate_perturbations, mse_at_deg, no_perturb_prediction, r_squared, rank_by_welch, select_deg, welch_t,
    PerturbationReport, PerturbationSlice, VARIANCE_FLOOR,
};
pub use rank::{ap_at_r, ap_at_r_ranked, auroc, average_precision, rank_order};
pub use report::{
    aggregate_seeds, evaluate, ContextFreeReport, ContextSliceReport, MetricReport, MetricSuite,
    NamedMetrics, SeedAggregate,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("score at position {0} is not finite")]
    NonFiniteScore(usize),
    #[error("slice is empty")]
    EmptySlice,
    #[error("degenerate slice{}: {positives} positives, {negatives} negatives", context.as_ref().map(|c| alloc::format!(" {c}")).unwrap_or_default())]
    DegenerateSlice {
        context: Option<String>,
        positives: usize,
        negatives: usize,
    },
    #[error("rank cutoff R must be at least 1")]
    InvalidRank,
    #[error("top-K must be at least 1")]
    InvalidTopK,
    #[error("top-{k} requested but only {available} contexts are eligible")]
    NotEnoughContexts { k: usize, available: usize },
    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("missing: {0} test keys have no prediction")]
    MissingPredictions(usize),
    #[error("unknown: {0} predictions do not match any test key")]
    UnknownKeys(usize),
    #[error("expression matrix is not normalized")]
    NotNormalized,
    #[error("{condition} has {cells} cells; at least 2 are required")]
    TooFewCells { condition: &'static str, cells: usize },
    #[error("control and perturbed matrices have different gene lists")]
    GeneMismatch,
    #[error("gene {0} is not in the gene index")]
    MissingGene(String),
    #[error("differentially expressed gene list is empty")]
    EmptyDeg,
    #[error("actual values are constant; R^2 is undefined")]
    ConstantActual,
    #[error("need at least 2 values, got {0}")]
    TooShort(usize),
    #[error("no prediction for perturbation {0}")]
    MissingPerturbation(String),
    #[error("no reports to aggregate")]
    NoReports,
    #[error("report {index} has a different metric set than report 0")]
    KeyMismatch { index: usize },
}

pub(crate) fn check_inputs(scores: &[f64], labels: &[crate::Label]) -> Result<(), MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricError::NonFiniteScore(i));
    }
    Ok(())
}
