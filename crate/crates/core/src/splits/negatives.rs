use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::SplitError;
use crate::rng::SeededRng;
use crate::{BindingPair, EntityId, Label};

/// How non-binding receptor/ligand pairs are produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NegativeHeuristic {
    /// Random recombination of the observed receptors and ligands.
    RN,
    /// Observed ligands paired with receptors from an external pool.
    ET,
    /// Experimentally measured negatives supplied with the input.
    NA,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativeSamplingConfig {
    pub heuristic: NegativeHeuristic,
    /// Negatives per positive.
    pub ratio: f64,
    #[serde(default)]
    pub external_pool: Vec<EntityId>,
    pub seed: u64,
}

/// Number of negatives requested for `n_positives` at `ratio`.
pub fn requested_negatives(ratio: f64, n_positives: usize) -> usize {
    // the epsilon keeps products like 0.1 * 30 from rounding up to 4
    Float::ceil(ratio * n_positives as f64 - 1e-9).max(0.0) as usize
}

/// Builds labeled negatives for binding pairs. Positive-labeled input rows
/// are the positive set; negative-labeled rows are only used by NA.
///
/// RN and ET return exactly `ceil(ratio * |positives|)` distinct pairs, none
/// of them a positive, sorted by (receptor, ligand).
pub fn generate_negatives(pairs: &[BindingPair], cfg: &NegativeSamplingConfig) -> Result<Vec<BindingPair>, SplitError> {
    if !(cfg.ratio.is_finite() && cfg.ratio > 0.0) {
        return Err(SplitError::InvalidRatio(cfg.ratio));
    }
    let positives: BTreeSet<(&EntityId, &EntityId)> = pairs
        .iter()
        .filter(|p| p.label.is_positive())
        .map(|p| p.key())
        .collect();
    let ligands: Vec<&EntityId> = positives.iter().map(|(_, l)| *l).collect::<BTreeSet<_>>().into_iter().collect();
    let receptors: Vec<&EntityId> = match cfg.heuristic {
        NegativeHeuristic::NA => {
            let out: BTreeSet<(&EntityId, &EntityId)> = pairs
                .iter()
                .filter(|p| !p.label.is_positive() && !positives.contains(&p.key()))
                .map(|p| p.key())
                .collect();
            if out.is_empty() {
                return Err(SplitError::MissingExperimentalNegatives);
            }
            return Ok(out.into_iter().map(negative).collect());
        }
        NegativeHeuristic::RN => positives.iter().map(|(r, _)| *r).collect::<BTreeSet<_>>().into_iter().collect(),
        NegativeHeuristic::ET => {
            if cfg.external_pool.is_empty() {
                return Err(SplitError::MissingExternalPool);
            }
            cfg.external_pool.iter().collect::<BTreeSet<_>>().into_iter().collect()
        }
    };
    let requested = requested_negatives(cfg.ratio, positives.len());
    let space = receptors.len() * ligands.len();
    let blocked = receptors
        .iter()
        .flat_map(|r| ligands.iter().map(move |l| (*r, *l)))
        .filter(|k| positives.contains(k))
        .count();
    let available = space - blocked;
    if requested > available {
        return Err(SplitError::ExhaustedCandidates { requested, available });
    }
    let mut rng = SeededRng::new(cfg.seed);
    let mut chosen: BTreeSet<(&EntityId, &EntityId)> = BTreeSet::new();
    if requested.saturating_mul(4) <= available {
        // sparse request: rejection sampling over the grid
        while chosen.len() < requested {
            let key = (receptors[rng.index(receptors.len())], ligands[rng.index(ligands.len())]);
            if !positives.contains(&key) {
                chosen.insert(key);
            }
        }
    } else {
        let candidates: Vec<(&EntityId, &EntityId)> = receptors
            .iter()
            .flat_map(|r| ligands.iter().map(move |l| (*r, *l)))
            .filter(|k| !positives.contains(k))
            .collect();
        chosen.extend(rng.sample_indices(candidates.len(), requested).into_iter().map(|i| candidates[i]));
    }
    Ok(chosen.into_iter().map(negative).collect())
}

fn negative((r, l): (&EntityId, &EntityId)) -> BindingPair {
    BindingPair::new(r.clone(), l.clone(), Label::Negative)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    fn pair(r: &str, l: &str, label: Label) -> BindingPair {
        BindingPair::new(EntityId::new(r).unwrap(), EntityId::new(l).unwrap(), label)
    }

    fn cfg(heuristic: NegativeHeuristic, ratio: f64) -> NegativeSamplingConfig {
        NegativeSamplingConfig {
            heuristic,
            ratio,
            external_pool: Vec::new(),
            seed: 3,
        }
    }

    #[test]
    fn rn_two_by_two() {
        let pos = [pair("T1", "E1", Label::Positive), pair("T2", "E2", Label::Positive)];
        let out = generate_negatives(&pos, &cfg(NegativeHeuristic::RN, 1.0)).unwrap();
        assert_eq!(out, vec![pair("T1", "E2", Label::Negative), pair("T2", "E1", Label::Negative)]);
        assert!(matches!(
            generate_negatives(&pos, &cfg(NegativeHeuristic::RN, 1.5)),
            Err(SplitError::ExhaustedCandidates { requested: 3, available: 2 })
        ));
    }

    #[test]
    fn et_requires_pool() {
        let pos = [pair("T1", "E1", Label::Positive)];
        assert_eq!(
            generate_negatives(&pos, &cfg(NegativeHeuristic::ET, 1.0)),
            Err(SplitError::MissingExternalPool)
        );
        let mut c = cfg(NegativeHeuristic::ET, 2.0);
        c.external_pool = vec![EntityId::new("X1").unwrap(), EntityId::new("X2").unwrap(), EntityId::new("T1").unwrap()];
        let out = generate_negatives(&pos, &c).unwrap();
        assert_eq!(out, vec![pair("X1", "E1", Label::Negative), pair("X2", "E1", Label::Negative)]);
    }

    #[test]
    fn na_passes_through() {
        let input = [
            pair("T1", "E1", Label::Positive),
            pair("T3", "E1", Label::Negative),
            pair("T3", "E1", Label::Negative),
        ];
        let out = generate_negatives(&input, &cfg(NegativeHeuristic::NA, 1.0)).unwrap();
        assert_eq!(out, vec![pair("T3", "E1", Label::Negative)]);
        assert_eq!(
            generate_negatives(&input[..1], &cfg(NegativeHeuristic::NA, 1.0)),
            Err(SplitError::MissingExperimentalNegatives)
        );
    }

    #[test]
    fn sparse_path_cardinality() {
        let pos: Vec<BindingPair> = (0..40).map(|i| pair(&format!("T{i}"), &format!("E{}", i % 7), Label::Positive)).collect();
        let out = generate_negatives(&pos, &cfg(NegativeHeuristic::RN, 0.5)).unwrap();
        assert_eq!(out.len(), 20);
        assert!(out.iter().all(|n| !pos.iter().any(|p| p.key() == n.key())));
        assert_eq!(out, generate_negatives(&pos, &cfg(NegativeHeuristic::RN, 0.5)).unwrap());
    }

    #[test]
    fn ratio_rounding() {
        assert_eq!(requested_negatives(0.1, 30), 3);
        assert_eq!(requested_negatives(0.25, 10), 3);
        assert_eq!(requested_negatives(1.0, 0), 0);
    }
}
