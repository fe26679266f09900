use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::report::NamedMetrics;
use super::MetricError;
use crate::{Condition, EntityId, ExpressionMatrix};

/// Lower bound on the squared standard error in the Welch statistic, so a
/// gene that is constant in both conditions gets a finite score.
pub const VARIANCE_FLOOR: f64 = 1e-12;

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

/// Welch (unequal variance) t statistic of `treated` against `control`,
/// using sample variances. Both inputs need at least two values.
pub fn welch_t(treated: &[f64], control: &[f64]) -> f64 {
    let (mt, vt) = mean_var(treated);
    let (mc, vc) = mean_var(control);
    let se2 = (vt / treated.len() as f64 + vc / control.len() as f64).max(VARIANCE_FLOOR);
    (mt - mc) / Float::sqrt(se2)
}

fn column(m: &[f64], n_genes: usize, gene: usize) -> Vec<f64> {
    m.chunks_exact(n_genes).map(|row| row[gene]).collect()
}

/// The `k` genes with the largest |t| between perturbed and control cells
/// (normalized values). Ties go to the lexicographically smaller gene id.
pub fn select_deg(
    control: &ExpressionMatrix,
    perturbed: &ExpressionMatrix,
    k: usize,
) -> Result<Vec<EntityId>, MetricError> {
    if k == 0 {
        return Err(MetricError::InvalidTopK);
    }
    if control.genes() != perturbed.genes() {
        return Err(MetricError::GeneMismatch);
    }
    let (c, p) = match (control.normalized(), perturbed.normalized()) {
        (Some(c), Some(p)) => (c, p),
        _ => return Err(MetricError::NotNormalized),
    };
    for (name, m) in [("control", control), ("perturbed", perturbed)] {
        if m.n_cells() < 2 {
            return Err(MetricError::TooFewCells {
                condition: name,
                cells: m.n_cells(),
            });
        }
    }
    Ok(rank_by_welch(control.genes(), c, p, k))
}

/// Core of [`select_deg`] on raw row-major value blocks (cells x genes).
pub fn rank_by_welch(genes: &[EntityId], control: &[f64], perturbed: &[f64], k: usize) -> Vec<EntityId> {
    let g = genes.len();
    let mut scored: Vec<(f64, &EntityId)> = (0..g)
        .map(|j| {
            let t = welch_t(&column(perturbed, g, j), &column(control, g, j));
            (Float::abs(t), &genes[j])
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    scored.into_iter().take(k).map(|(_, id)| id.clone()).collect()
}

/// Mean squared error between `pred` and `actual` restricted to `deg`.
pub fn mse_at_deg(
    pred: &[f64],
    actual: &[f64],
    deg: &[EntityId],
    gene_index: &BTreeMap<EntityId, usize>,
) -> Result<f64, MetricError> {
    if pred.len() != actual.len() {
        return Err(MetricError::LengthMismatch {
            scores: pred.len(),
            labels: actual.len(),
        });
    }
    if deg.is_empty() {
        return Err(MetricError::EmptyDeg);
    }
    let mut sum = 0.0;
    for gene in deg {
        let i = match gene_index.get(gene) {
            Some(&i) if i < pred.len() => i,
            _ => return Err(MetricError::MissingGene(gene.to_string())),
        };
        let d = pred[i] - actual[i];
        sum += d * d;
    }
    Ok(sum / deg.len() as f64)
}

/// Coefficient of determination `1 - SS_res / SS_tot`. Can be negative.
pub fn r_squared(pred: &[f64], actual: &[f64]) -> Result<f64, MetricError> {
    if pred.len() != actual.len() {
        return Err(MetricError::LengthMismatch {
            scores: pred.len(),
            labels: actual.len(),
        });
    }
    if actual.len() < 2 {
        return Err(MetricError::TooShort(actual.len()));
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean) * (a - mean)).sum();
    if ss_tot == 0.0 {
        return Err(MetricError::ConstantActual);
    }
    let ss_res: f64 = pred.iter().zip(actual).map(|(p, a)| (a - p) * (a - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// The "no-perturb" baseline: predict the mean control expression for every
/// perturbation.
pub fn no_perturb_prediction(control: &ExpressionMatrix) -> Result<Vec<f64>, MetricError> {
    control.mean_normalized().ok_or(MetricError::NotNormalized)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSlice {
    pub perturbation: EntityId,
    pub context: String,
    pub deg: Vec<EntityId>,
    pub mse_at_deg: f64,
    pub r_squared: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub k: usize,
    pub per_perturbation: Vec<PerturbationSlice>,
    pub mean_mse_at_deg: f64,
    pub mean_r_squared: Option<f64>,
}

/// Scores predicted post-perturbation mean expression vectors (one per
/// perturbation, indexed like the control gene list) against observed means.
pub fn evaluate_perturbations(
    control: &ExpressionMatrix,
    perturbed: &[ExpressionMatrix],
    predictions: &BTreeMap<EntityId, Vec<f64>>,
    k: usize,
) -> Result<PerturbationReport, MetricError> {
    let gene_index: BTreeMap<EntityId, usize> = control
        .genes()
        .iter()
        .enumerate()
        .map(|(i, g)| (g.clone(), i))
        .collect();
    let mut per_perturbation = Vec::with_capacity(perturbed.len());
    for m in perturbed {
        let p = match &m.condition {
            Condition::Perturbed(p) => p.clone(),
            Condition::Control => continue,
        };
        let deg = select_deg(control, m, k)?;
        let actual = m.mean_normalized().ok_or(MetricError::NotNormalized)?;
        let pred = predictions
            .get(&p)
            .ok_or_else(|| MetricError::MissingPerturbation(p.to_string()))?;
        per_perturbation.push(PerturbationSlice {
            mse_at_deg: mse_at_deg(pred, &actual, &deg, &gene_index)?,
            r_squared: r_squared(pred, &actual).ok(),
            perturbation: p,
            context: m.context.to_string(),
            deg,
        });
    }
    let n = per_perturbation.len().max(1) as f64;
    let mean_mse_at_deg = per_perturbation.iter().map(|s| s.mse_at_deg).sum::<f64>() / n;
    let r2: Vec<f64> = per_perturbation.iter().filter_map(|s| s.r_squared).collect();
    let mean_r_squared = (!r2.is_empty()).then(|| r2.iter().sum::<f64>() / r2.len() as f64);
    Ok(PerturbationReport {
        k,
        per_perturbation,
        mean_mse_at_deg,
        mean_r_squared,
    })
}

impl NamedMetrics for PerturbationReport {
    fn named_metrics(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        m.insert(format!("mse@{}deg", self.k), self.mean_mse_at_deg);
        if let Some(r2) = self.mean_r_squared {
            m.insert("r2".to_string(), r2);
        }
        m
    }
}
