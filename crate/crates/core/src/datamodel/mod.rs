//! Typed records shared by every other module.

mod date;
mod expression;
mod graph;
mod records;

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub use date::Date;
pub use expression::{median_total, Condition, ExpressionMatrix, NormalizeWarning};
pub use graph::{ContextGraph, GraphBuilder};
pub use records::{BindingPair, Phase, TrialRecord, AMINO_ACIDS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("identifier must be non-empty")]
    EmptyId,
    #[error("label must be 0 or 1, got {0:?}")]
    BadLabel(String),
    #[error("score for ({entity}, {context}) is {score}; scores must be finite and in [0, 1]")]
    ScoreOutOfRange {
        entity: String,
        context: String,
        score: f64,
    },
    #[error("duplicate key ({0}, {1})")]
    DuplicateKey(String, String),
    #[error("invalid date {0:?}; expected YYYY-MM-DD")]
    BadDate(String),
    #[error("start date {start} is after completion date {completion}")]
    DateOrder { start: Date, completion: Date },
    #[error("invalid trial phase {0:?}")]
    BadPhase(String),
    #[error("sequence {0:?} contains characters outside the amino-acid alphabet")]
    BadSequence(String),
    #[error("self-loop on node {0}")]
    SelfLoop(String),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("edge weight {0} is not a positive finite number")]
    NonPositiveWeight(f64),
    #[error("context {0} has no member nodes")]
    EmptyContext(String),
    #[error("expression matrix has no cells or no genes")]
    EmptyMatrix,
    #[error("expression matrix shape mismatch: {cells} cells x {genes} genes but {values} values")]
    ShapeMismatch {
        cells: usize,
        genes: usize,
        values: usize,
    },
    #[error("raw count at cell {cell}, gene {gene} is negative or not finite")]
    BadCount { cell: usize, gene: usize },
    #[error("duplicate gene {0}")]
    DuplicateGene(String),
    #[error("every cell has zero total count")]
    AllZeroCells,
    #[error("normalization target {0} must be positive and finite")]
    BadTarget(f64),
}

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Result<Self, DataError> {
                let id = id.into();
                if id.is_empty() {
                    return Err(DataError::EmptyId);
                }
                Ok(Self(id))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl TryFrom<String> for $name {
            type Error = DataError;
            fn try_from(s: String) -> Result<Self, DataError> {
                Self::new(s)
            }
        }

        impl TryFrom<&str> for $name {
            type Error = DataError;
            fn try_from(s: &str) -> Result<Self, DataError> {
                Self::new(s)
            }
        }

        impl From<$name> for String {
            fn from(id: $name) -> String {
                id.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl core::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

string_id!(
    /// Protein, receptor, epitope, trial or gene identifier.
    EntityId
);
string_id!(
    /// Cell type or cell line name.
    ContextId
);

/// Binary outcome. Serialized as the integers 0 and 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Label::Negative => 0.0,
            Label::Positive => 1.0,
        }
    }

    pub fn parse(s: &str) -> Result<Self, DataError> {
        match s.trim() {
            "0" => Ok(Label::Negative),
            "1" => Ok(Label::Positive),
            other => Err(DataError::BadLabel(other.to_string())),
        }
    }
}

impl From<bool> for Label {
    fn from(b: bool) -> Self {
        if b {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

impl TryFrom<u8> for Label {
    type Error = DataError;
    fn try_from(v: u8) -> Result<Self, DataError> {
        match v {
            0 => Ok(Label::Negative),
            1 => Ok(Label::Positive),
            other => Err(DataError::BadLabel(other.to_string())),
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        match l {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }
}

/// One (entity, context, label) observation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContextSample {
    pub entity: EntityId,
    pub context: ContextId,
    pub label: Label,
}

impl ContextSample {
    pub fn new(entity: EntityId, context: ContextId, label: Label) -> Self {
        Self {
            entity,
            context,
            label,
        }
    }

    pub fn key(&self) -> (&EntityId, &ContextId) {
        (&self.entity, &self.context)
    }
}

/// Rejects a sample list that repeats an (entity, context) key.
pub fn check_unique_samples(samples: &[ContextSample]) -> Result<(), DataError> {
    let mut seen = BTreeSet::new();
    for s in samples {
        if !seen.insert((&s.entity, &s.context)) {
            return Err(DataError::DuplicateKey(
                s.entity.to_string(),
                s.context.to_string(),
            ));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub entity: EntityId,
    pub context: ContextId,
    pub score: f64,
}

impl PredictionRow {
    pub fn new(entity: EntityId, context: ContextId, score: f64) -> Result<Self, DataError> {
        if !score.is_finite() || !(0.0..=1.0).contains(&score) {
            return Err(DataError::ScoreOutOfRange {
                entity: entity.to_string(),
                context: context.to_string(),
                score,
            });
        }
        Ok(Self {
            entity,
            context,
            score,
        })
    }
}

/// Model scores for (entity, context) pairs of one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub dataset_ref: String,
    rows: Vec<PredictionRow>,
}

impl PredictionSet {
    pub fn new(dataset_ref: impl Into<String>, rows: Vec<PredictionRow>) -> Result<Self, DataError> {
        let mut seen = BTreeSet::new();
        for r in &rows {
            if !r.score.is_finite() || !(0.0..=1.0).contains(&r.score) {
                return Err(DataError::ScoreOutOfRange {
                    entity: r.entity.to_string(),
                    context: r.context.to_string(),
                    score: r.score,
                });
            }
            if !seen.insert((&r.entity, &r.context)) {
                return Err(DataError::DuplicateKey(
                    r.entity.to_string(),
                    r.context.to_string(),
                ));
            }
        }
        Ok(Self {
            dataset_ref: dataset_ref.into(),
            rows,
        })
    }

    pub fn rows(&self) -> &[PredictionRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}
