use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DataError, Date, EntityId, Label};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    I,
    II,
    III,
}

impl FromStr for Phase {
    type Err = DataError;
    fn from_str(s: &str) -> Result<Self, DataError> {
        match s.trim() {
            "I" | "1" | "phase 1" => Ok(Phase::I),
            "II" | "2" | "phase 2" => Ok(Phase::II),
            "III" | "3" | "phase 3" => Ok(Phase::III),
            other => Err(DataError::BadPhase(other.to_string())),
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::I => "I",
            Phase::II => "II",
            Phase::III => "III",
        })
    }
}

/// A clinical trial with its outcome. Design and macro attributes are kept as
/// an uninterpreted string bag.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: EntityId,
    start_date: Date,
    completion_date: Date,
    pub phase: Phase,
    pub label: Label,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, String>,
}

impl TrialRecord {
    pub fn new(
        trial_id: EntityId,
        start_date: Date,
        completion_date: Date,
        phase: Phase,
        label: Label,
    ) -> Result<Self, DataError> {
        if start_date > completion_date {
            return Err(DataError::DateOrder {
                start: start_date,
                completion: completion_date,
            });
        }
        Ok(Self {
            trial_id,
            start_date,
            completion_date,
            phase,
            label,
            attributes: BTreeMap::new(),
        })
    }

    pub fn start_date(&self) -> Date {
        self.start_date
    }

    pub fn completion_date(&self) -> Date {
        self.completion_date
    }
}

pub const AMINO_ACIDS: &str = "ACDEFGHIKLMNPQRSTVWY";

/// A receptor (TCR) / ligand (epitope) pair with a binding label.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BindingPair {
    pub receptor: EntityId,
    pub ligand: EntityId,
    pub label: Label,
}

impl BindingPair {
    pub fn new(receptor: EntityId, ligand: EntityId, label: Label) -> Self {
        Self {
            receptor,
            ligand,
            label,
        }
    }

    /// Like [`BindingPair::new`] but both sequences must use the 20 standard
    /// amino-acid letters.
    pub fn new_checked(receptor: EntityId, ligand: EntityId, label: Label) -> Result<Self, DataError> {
        for seq in [&receptor, &ligand] {
            if !seq.as_str().chars().all(|c| AMINO_ACIDS.contains(c)) {
                return Err(DataError::BadSequence(seq.to_string()));
            }
        }
        Ok(Self::new(receptor, ligand, label))
    }

    pub fn key(&self) -> (&EntityId, &EntityId) {
        (&self.receptor, &self.ligand)
    }
}
