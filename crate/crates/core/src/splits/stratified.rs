use alloc::string::String;
use alloc::vec::Vec;

use super::cold::shuffle_allocate;
use super::{sample_key, Fractions, SplitError, SplitKind, SplitSpec, SplitUnit};
use crate::rng::SeededRng;
use crate::ContextSample;

/// Sample-level train/test split that keeps the class ratio in each fold
/// within one item of the global ratio.
pub fn stratified_split(samples: &[ContextSample], test_fraction: f64, seed: u64) -> Result<SplitSpec, SplitError> {
    let fractions = Fractions::new(1.0 - test_fraction, 0.0, test_fraction)?;
    let mut pos: Vec<String> = Vec::new();
    let mut neg: Vec<String> = Vec::new();
    for s in samples {
        if s.label.is_positive() {
            pos.push(sample_key(s));
        } else {
            neg.push(sample_key(s));
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(SplitError::DegenerateClass);
    }
    pos.sort();
    neg.sort();
    // one stream, positives first, so the result is a function of the seed only
    let mut rng = SeededRng::new(seed);
    let [mut train, _, mut test] = shuffle_allocate(pos, &fractions, &mut rng);
    let [train_neg, _, test_neg] = shuffle_allocate(neg, &fractions, &mut rng);
    train.extend(train_neg);
    test.extend(test_neg);
    Ok(SplitSpec::from_folds(
        SplitKind::Stratified,
        seed,
        SplitUnit::Sample,
        [train, Vec::new(), test],
        Vec::new(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splits::Fold;
    use crate::{ContextId, EntityId, Label};
    use alloc::format;

    fn data(n: usize, n_pos: usize) -> Vec<ContextSample> {
        (0..n)
            .map(|i| {
                ContextSample::new(
                    EntityId::new(format!("t{i}")).unwrap(),
                    ContextId::new("ep").unwrap(),
                    Label::from(i < n_pos),
                )
            })
            .collect()
    }

    #[test]
    fn ten_ninety_proportional() {
        let d = data(100, 20);
        let s = stratified_split(&d, 0.9, 4).unwrap();
        let train = s.select(&d, Fold::Train);
        let pos = train.iter().filter(|x| x.label.is_positive()).count();
        assert_eq!((pos, train.len() - pos), (2, 8));
        assert_eq!(s.test.len(), 90);
        assert_eq!(s, stratified_split(&d, 0.9, 4).unwrap());
    }

    #[test]
    fn single_class_rejected() {
        assert_eq!(stratified_split(&data(10, 0), 0.9, 1), Err(SplitError::DegenerateClass));
        assert_eq!(stratified_split(&data(10, 10), 0.9, 1), Err(SplitError::DegenerateClass));
    }
}
