use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{ContextId, DataError, EntityId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Control,
    Perturbed(EntityId),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum NormalizeWarning {
    /// The cell had a zero total count and was left as zeros.
    AllZeroCell(usize),
}

/// Cells x genes count matrix for one condition in one context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpressionMatrix {
    genes: Vec<EntityId>,
    cells: Vec<String>,
    counts: Vec<f64>,
    normalized: Option<Vec<f64>>,
    pub condition: Condition,
    pub context: ContextId,
    warnings: Vec<NormalizeWarning>,
}

impl ExpressionMatrix {
    /// `counts` is row-major, one row per cell.
    pub fn new(
        genes: Vec<EntityId>,
        cells: Vec<String>,
        counts: Vec<f64>,
        condition: Condition,
        context: ContextId,
    ) -> Result<Self, DataError> {
        if genes.is_empty() || cells.is_empty() {
            return Err(DataError::EmptyMatrix);
        }
        if counts.len() != genes.len() * cells.len() {
            return Err(DataError::ShapeMismatch {
                cells: cells.len(),
                genes: genes.len(),
                values: counts.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for g in &genes {
            if !seen.insert(g) {
                return Err(DataError::DuplicateGene(g.to_string()));
            }
        }
        if let Some(pos) = counts.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(DataError::BadCount {
                cell: pos / genes.len(),
                gene: pos % genes.len(),
            });
        }
        Ok(Self {
            genes,
            cells,
            counts,
            normalized: None,
            condition,
            context,
            warnings: Vec::new(),
        })
    }

    pub fn genes(&self) -> &[EntityId] {
        &self.genes
    }

    pub fn cells(&self) -> &[String] {
        &self.cells
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_genes(&self) -> usize {
        self.genes.len()
    }

    pub fn counts_row(&self, cell: usize) -> &[f64] {
        let g = self.genes.len();
        &self.counts[cell * g..(cell + 1) * g]
    }

    pub fn normalized(&self) -> Option<&[f64]> {
        self.normalized.as_deref()
    }

    pub fn normalized_row(&self, cell: usize) -> Option<&[f64]> {
        let g = self.genes.len();
        self.normalized.as_ref().map(|v| &v[cell * g..(cell + 1) * g])
    }

    pub fn warnings(&self) -> &[NormalizeWarning] {
        &self.warnings
    }

    pub fn cell_totals(&self) -> Vec<f64> {
        (0..self.n_cells()).map(|c| self.counts_row(c).iter().sum()).collect()
    }

    /// Scale each cell to the median total count of this matrix, then apply
    /// `ln(1 + x)`.
    pub fn normalize_counts(&self) -> Result<ExpressionMatrix, DataError> {
        let target = median_total(&[self])?;
        self.normalize_to(target)
    }

    /// Scale each cell so its counts sum to `target`, then `ln(1 + x)`.
    /// Raw counts are kept. All-zero cells stay zero and are reported.
    pub fn normalize_to(&self, target: f64) -> Result<ExpressionMatrix, DataError> {
        if !(target.is_finite() && target > 0.0) {
            return Err(DataError::BadTarget(target));
        }
        let g = self.genes.len();
        let mut out = Vec::with_capacity(self.counts.len());
        let mut warnings = Vec::new();
        for c in 0..self.n_cells() {
            let row = self.counts_row(c);
            let total: f64 = row.iter().sum();
            if total == 0.0 {
                warnings.push(NormalizeWarning::AllZeroCell(c));
                out.extend(core::iter::repeat_n(0.0, g));
                continue;
            }
            let scale = target / total;
            out.extend(row.iter().map(|&x| Float::ln_1p(x * scale)));
        }
        let mut m = self.clone();
        m.normalized = Some(out);
        m.warnings = warnings;
        Ok(m)
    }

    /// Per-gene mean of the normalized values.
    pub fn mean_normalized(&self) -> Option<Vec<f64>> {
        let data = self.normalized.as_ref()?;
        let g = self.genes.len();
        let mut mean = alloc::vec![0.0; g];
        for row in data.chunks_exact(g) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let n = self.n_cells() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        Some(mean)
    }
}

/// Median of per-cell totals over the non-zero cells of all given matrices.
pub fn median_total(matrices: &[&ExpressionMatrix]) -> Result<f64, DataError> {
    let mut totals: Vec<f64> = matrices
        .iter()
        .flat_map(|m| m.cell_totals())
        .filter(|&t| t > 0.0)
        .collect();
    if totals.is_empty() {
        return Err(DataError::AllZeroCells);
    }
    totals.sort_by(f64::total_cmp);
    let n = totals.len();
    Ok(if n % 2 == 1 {
        totals[n / 2]
    } else {
        (totals[n / 2 - 1] + totals[n / 2]) / 2.0
    })
}
