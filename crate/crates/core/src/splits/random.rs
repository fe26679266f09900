use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::cold::shuffle_allocate;
use super::{Fractions, SplitKind, SplitSpec, SplitUnit};
use crate::rng::SeededRng;

/// Uniform seeded shuffle of the distinct ids, then contiguous slicing.
pub fn random_split<S: AsRef<str>>(ids: &[S], fractions: Fractions, seed: u64, unit: SplitUnit) -> SplitSpec {
    let units: BTreeSet<&str> = ids.iter().map(|s| s.as_ref()).collect();
    let units: Vec<String> = units.into_iter().map(|u| u.to_string()).collect();
    let folds = shuffle_allocate(units, &fractions, &mut SeededRng::new(seed));
    SplitSpec::from_folds(SplitKind::Random, seed, unit, folds, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("r{i:03}")).collect()
    }

    #[test]
    fn sizes() {
        let s = random_split(&ids(10), Fractions::default(), 1, SplitUnit::Record);
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (8, 1, 1));
        let s = random_split(&ids(10), Fractions::new(1.0, 0.0, 0.0).unwrap(), 1, SplitUnit::Record);
        assert_eq!(s.train.len(), 10);
    }

    #[test]
    fn seeds_differ() {
        let a = random_split(&ids(100), Fractions::default(), 1, SplitUnit::Record);
        let b = random_split(&ids(100), Fractions::default(), 2, SplitUnit::Record);
        assert_ne!(a.test, b.test);
        let c = random_split(&ids(100), Fractions::default(), 1, SplitUnit::Record);
        assert_eq!(a, c);
    }
}
