//! Seeded train/valid/test split generators and negative sampling.
//!
//! Every generator first puts its units in a canonical (sorted) order, so the
//! result depends only on the unit set, the seed and the parameters, never on
//! input order. Fold sizes use largest-remainder rounding.

mod cold;
mod negatives;
mod random;
mod stratified;
mod temporal;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::rng::PRNG_NAME;
use crate::ContextSample;

pub use cold::{cold_split, ColdKey};
pub use negatives::{generate_negatives, requested_negatives, NegativeHeuristic, NegativeSamplingConfig};
pub use random::random_split;
pub use stratified::stratified_split;
pub use temporal::temporal_split;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error("fractions must be non-negative and sum to 1, got ({0}, {1}, {2})")]
    InvalidFractions(f64, f64, f64),
    #[error("need at least 3 distinct split units, found {0}")]
    TooFewEntities(usize),
    #[error("fold {0} would be empty")]
    EmptyFold(&'static str),
    #[error("both classes are required for a stratified split")]
    DegenerateClass,
    #[error("negative ratio {0} must be positive and finite")]
    InvalidRatio(f64),
    #[error("requested {requested} negatives but only {available} candidates exist")]
    ExhaustedCandidates { requested: usize, available: usize },
    #[error("the ET heuristic needs a non-empty external receptor pool")]
    MissingExternalPool,
    #[error("the NA heuristic needs experimentally labeled negatives in the input")]
    MissingExperimentalNegatives,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Cold,
    Temporal,
    Stratified,
    Random,
}

/// What the ids listed in a [`SplitSpec`] refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitUnit {
    Entity,
    Context,
    /// Whole samples, keyed by [`sample_key`].
    Sample,
    /// Free-standing record ids (e.g. trials).
    Record,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fold {
    Train,
    Valid,
    Test,
}

/// Key of a sample-level split unit: `entity|context`.
pub fn sample_key(s: &ContextSample) -> String {
    format!("{}|{}", s.entity, s.context)
}

/// Train / valid / test fractions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fractions {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Fractions {
    pub fn new(train: f64, valid: f64, test: f64) -> Result<Self, SplitError> {
        let ok = [train, valid, test].iter().all(|f| f.is_finite() && *f >= 0.0)
            && (train + valid + test - 1.0).abs() <= 1e-9;
        if !ok {
            return Err(SplitError::InvalidFractions(train, valid, test));
        }
        Ok(Self { train, valid, test })
    }

    /// Largest-remainder allocation of `n` items; sizes sum to `n` and each
    /// is within one of its exact share. Remainder ties go to the earlier fold.
    pub fn allocate(&self, n: usize) -> [usize; 3] {
        let shares = [self.train, self.valid, self.test].map(|f| f * n as f64);
        let mut sizes = shares.map(|s| s.floor() as usize);
        let mut rest = n - sizes.iter().sum::<usize>().min(n);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| {
            let ra = shares[a] - shares[a].floor();
            let rb = shares[b] - shares[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().cycle() {
            if rest == 0 {
                break;
            }
            sizes[i] += 1;
            rest -= 1;
        }
        sizes
    }
}

impl Default for Fractions {
    fn default() -> Self {
        Self {
            train: 0.8,
            valid: 0.1,
            test: 0.1,
        }
    }
}

/// A deterministic assignment of units to folds. Lists are sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub kind: SplitKind,
    pub seed: u64,
    pub prng: String,
    pub unit: SplitUnit,
    pub train: Vec<String>,
    pub valid: Vec<String>,
    pub test: Vec<String>,
    /// Units excluded from every fold (temporal straddlers).
    #[serde(default)]
    pub dropped: Vec<String>,
}

impl SplitSpec {
    pub(crate) fn from_folds(
        kind: SplitKind,
        seed: u64,
        unit: SplitUnit,
        mut folds: [Vec<String>; 3],
        mut dropped: Vec<String>,
    ) -> Self {
        for f in folds.iter_mut() {
            f.sort();
        }
        dropped.sort();
        let [train, valid, test] = folds;
        Self {
            kind,
            seed,
            prng: PRNG_NAME.to_string(),
            unit,
            train,
            valid,
            test,
            dropped,
        }
    }

    pub fn fold_of(&self, id: &str) -> Option<Fold> {
        let has = |v: &Vec<String>| v.binary_search_by(|x| x.as_str().cmp(id)).is_ok();
        if has(&self.train) {
            Some(Fold::Train)
        } else if has(&self.valid) {
            Some(Fold::Valid)
        } else if has(&self.test) {
            Some(Fold::Test)
        } else {
            None
        }
    }

    /// Fold of a sample according to this split's unit. `None` for samples
    /// the split does not cover (dropped or unknown units).
    pub fn fold_of_sample(&self, s: &ContextSample) -> Option<Fold> {
        match self.unit {
            SplitUnit::Entity | SplitUnit::Record => self.fold_of(s.entity.as_str()),
            SplitUnit::Context => self.fold_of(s.context.as_str()),
            SplitUnit::Sample => self.fold_of(&sample_key(s)),
        }
    }

    /// Samples falling into `fold`, in input order.
    pub fn select<'a>(&self, samples: &'a [ContextSample], fold: Fold) -> Vec<&'a ContextSample> {
        samples
            .iter()
            .filter(|s| self.fold_of_sample(s) == Some(fold))
            .collect()
    }

    pub fn fold(&self, fold: Fold) -> &[String] {
        match fold {
            Fold::Train => &self.train,
            Fold::Valid => &self.valid,
            Fold::Test => &self.test,
        }
    }

    /// Checks that the folds are pairwise disjoint.
    pub fn is_disjoint(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.train
            .iter()
            .chain(&self.valid)
            .chain(&self.test)
            .chain(&self.dropped)
            .all(|id| seen.insert(id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allocation_examples() {
        let f = Fractions::default();
        assert_eq!(f.allocate(10), [8, 1, 1]);
        assert_eq!(f.allocate(0), [0, 0, 0]);
        // shares 2.4 / 0.3 / 0.3: the spare item goes to the largest remainder
        assert_eq!(f.allocate(3), [3, 0, 0]);
        let all = Fractions::new(1.0, 0.0, 0.0).unwrap();
        assert_eq!(all.allocate(7), [7, 0, 0]);
    }

    #[test]
    fn allocation_within_one() {
        let f = Fractions::new(0.7, 0.2, 0.1).unwrap();
        for n in 0..200 {
            let s = f.allocate(n);
            assert_eq!(s.iter().sum::<usize>(), n);
            for (size, frac) in s.iter().zip([0.7, 0.2, 0.1]) {
                assert!((*size as f64 - frac * n as f64).abs() < 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn bad_fractions() {
        assert!(Fractions::new(0.5, 0.5, 0.5).is_err());
        assert!(Fractions::new(1.1, -0.1, 0.0).is_err());
    }
}
