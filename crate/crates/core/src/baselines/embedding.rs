use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::BaselineError;
use crate::EntityId;

/// Fixed-width vectors keyed by entity, with a free-form provenance tag
/// (model name and version).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    dim: usize,
    provenance: String,
    vectors: BTreeMap<EntityId, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, provenance: impl Into<String>) -> Result<Self, BaselineError> {
        if dim == 0 {
            return Err(BaselineError::InvalidConfig("dim"));
        }
        Ok(Self {
            dim,
            provenance: provenance.into(),
            vectors: BTreeMap::new(),
        })
    }

    /// Adds or replaces a vector. Length must equal `dim`; entries must be finite.
    pub fn insert(&mut self, entity: EntityId, vector: Vec<f64>) -> Result<(), BaselineError> {
        if vector.len() != self.dim {
            return Err(BaselineError::DimMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(BaselineError::NonFiniteEmbedding(entity.to_string()));
        }
        self.vectors.insert(entity, vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn get(&self, entity: &str) -> Option<&[f64]> {
        self.vectors.get(entity).map(|v| v.as_slice())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Entries in entity order.
    pub fn iter(&self) -> impl Iterator<Item = (&EntityId, &[f64])> {
        self.vectors.iter().map(|(k, v)| (k, v.as_slice()))
    }
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        ab / num_traits::Float::sqrt(aa * bb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn dim_checked() {
        let mut t = EmbeddingTable::new(2, "test/v1").unwrap();
        t.insert(EntityId::new("a").unwrap(), vec![1.0, 2.0]).unwrap();
        assert_eq!(
            t.insert(EntityId::new("b").unwrap(), vec![1.0]),
            Err(BaselineError::DimMismatch { expected: 2, found: 1 })
        );
        assert!(t.insert(EntityId::new("c").unwrap(), vec![f64::NAN, 0.0]).is_err());
        assert_eq!(t.get("a"), Some(&[1.0, 2.0][..]));
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn cosine_basics() {
        assert!((cosine(&[1.0, 0.0], &[2.0, 0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 3.0]), 0.0);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 3.0]), 0.0);
    }
}
