use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::cold::shuffle_allocate;
use super::{Fractions, SplitError, SplitKind, SplitSpec, SplitUnit};
use crate::rng::SeededRng;
use crate::{Date, TrialRecord};

/// Time-based split around `cutoff`.
///
/// Trials starting strictly after the cutoff go to test; trials completed
/// strictly before it go to train/valid (90/10, seeded). Trials matching
/// neither rule straddle the cutoff and are listed in `dropped`.
pub fn temporal_split(records: &[TrialRecord], cutoff: Date, seed: u64) -> Result<SplitSpec, SplitError> {
    // dedupe by id, first record wins
    let mut by_id: BTreeMap<&str, &TrialRecord> = BTreeMap::new();
    for r in records {
        by_id.entry(r.trial_id.as_str()).or_insert(r);
    }
    let mut early: Vec<String> = Vec::new();
    let mut test: Vec<String> = Vec::new();
    let mut dropped: Vec<String> = Vec::new();
    for (id, r) in by_id {
        if r.start_date() > cutoff {
            test.push(id.to_string());
        } else if r.completion_date() < cutoff {
            early.push(id.to_string());
        } else {
            dropped.push(id.to_string());
        }
    }
    if test.is_empty() {
        return Err(SplitError::EmptyFold("test"));
    }
    if early.is_empty() {
        return Err(SplitError::EmptyFold("train"));
    }
    let fractions = Fractions {
        train: 0.9,
        valid: 0.1,
        test: 0.0,
    };
    let [train, valid, _] = shuffle_allocate(early, &fractions, &mut SeededRng::new(seed));
    Ok(SplitSpec::from_folds(
        SplitKind::Temporal,
        seed,
        SplitUnit::Record,
        [train, valid, test],
        dropped,
    ))
}
