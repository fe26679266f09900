use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Fractions, SplitError, SplitKind, SplitSpec, SplitUnit};
use crate::rng::SeededRng;
use crate::ContextSample;

/// Which side of a sample is held out.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColdKey {
    /// Entities (proteins, receptors) never cross folds.
    #[default]
    Entity,
    /// Contexts (e.g. epitopes in a receptor/ligand table) never cross folds.
    Context,
}

/// Shuffle canonically ordered units and cut them into three folds.
pub(crate) fn shuffle_allocate(mut units: Vec<String>, fractions: &Fractions, rng: &mut SeededRng) -> [Vec<String>; 3] {
    rng.shuffle(&mut units);
    let [n_train, n_valid, _] = fractions.allocate(units.len());
    let test = units.split_off(n_train + n_valid);
    let valid = units.split_off(n_train);
    [units, valid, test]
}

/// Cold split over distinct units: all samples of an entity (or context)
/// share one fold, in every context.
pub fn cold_split(
    samples: &[ContextSample],
    fractions: Fractions,
    seed: u64,
    key: ColdKey,
) -> Result<SplitSpec, SplitError> {
    let units: BTreeSet<&str> = samples
        .iter()
        .map(|s| match key {
            ColdKey::Entity => s.entity.as_str(),
            ColdKey::Context => s.context.as_str(),
        })
        .collect();
    if units.len() < 3 {
        return Err(SplitError::TooFewEntities(units.len()));
    }
    let units: Vec<String> = units.into_iter().map(|u| u.to_string()).collect();
    let folds = shuffle_allocate(units, &fractions, &mut SeededRng::new(seed));
    let unit = match key {
        ColdKey::Entity => SplitUnit::Entity,
        ColdKey::Context => SplitUnit::Context,
    };
    Ok(SplitSpec::from_folds(SplitKind::Cold, seed, unit, folds, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splits::Fold;
    use crate::{ContextId, EntityId, Label};
    use alloc::format;

    fn samples(n_entities: usize, n_contexts: usize) -> Vec<ContextSample> {
        let mut v = Vec::new();
        for e in 0..n_entities {
            for c in 0..n_contexts {
                v.push(ContextSample::new(
                    EntityId::new(format!("p{e}")).unwrap(),
                    ContextId::new(format!("ct{c}")).unwrap(),
                    Label::from((e + c) % 3 == 0),
                ));
            }
        }
        v
    }

    #[test]
    fn ten_proteins_eight_one_one() {
        let s = cold_split(&samples(10, 2), Fractions::default(), 1, ColdKey::Entity).unwrap();
        assert_eq!((s.train.len(), s.valid.len(), s.test.len()), (8, 1, 1));
        assert!(s.is_disjoint());
    }

    #[test]
    fn deterministic_and_order_free() {
        let mut input = samples(30, 3);
        let a = cold_split(&input, Fractions::default(), 7, ColdKey::Entity).unwrap();
        input.reverse();
        let b = cold_split(&input, Fractions::default(), 7, ColdKey::Entity).unwrap();
        assert_eq!(a, b);
        let c = cold_split(&input, Fractions::default(), 8, ColdKey::Entity).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn entity_samples_share_a_fold() {
        let input = samples(20, 5);
        let s = cold_split(&input, Fractions::default(), 3, ColdKey::Entity).unwrap();
        for e in 0..20 {
            let folds: BTreeSet<Option<Fold>> = input
                .iter()
                .filter(|x| x.entity.as_str() == format!("p{e}"))
                .map(|x| s.fold_of_sample(x))
                .collect();
            assert_eq!(folds.len(), 1);
            assert!(folds.iter().next().unwrap().is_some());
        }
    }

    #[test]
    fn context_keyed() {
        let s = cold_split(&samples(4, 10), Fractions::default(), 3, ColdKey::Context).unwrap();
        assert_eq!(s.unit, SplitUnit::Context);
        assert_eq!(s.train.len() + s.valid.len() + s.test.len(), 10);
    }

    #[test]
    fn too_few_entities() {
        assert_eq!(
            cold_split(&samples(2, 4), Fractions::default(), 0, ColdKey::Entity),
            Err(SplitError::TooFewEntities(2))
        );
    }
}
