use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::BaselineError;
use crate::{ContextGraph, ContextId, EntityId, Label};

/// Outcome of propagation inside one context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelState {
    /// Seed labels (train and valid).
    pub fixed: BTreeMap<EntityId, Label>,
    /// Labels adopted during propagation.
    pub inferred: BTreeMap<EntityId, Label>,
    /// Score of every context member, in [0, 1].
    pub scores: BTreeMap<EntityId, f64>,
    /// Rounds that changed at least one label.
    pub rounds: usize,
}

/// Neighborhood-majority propagation on the subgraph induced by `context`.
///
/// Rounds are synchronous: every unlabeled node looks at its labeled
/// neighbors from the previous round and adopts a strict-majority label; a
/// tie or an empty neighborhood leaves it unlabeled. Labels never change once
/// set, so at most |V| rounds change anything.
///
/// A seed scores its own label. Any other node scores the fraction of its
/// labeled neighbors that are positive, or 0.5 when none is labeled.
pub fn label_propagation(
    graph: &ContextGraph,
    context: &ContextId,
    seeds: &BTreeMap<EntityId, Label>,
    max_rounds: usize,
) -> Result<LabelState, BaselineError> {
    let members = graph
        .context_members(context)
        .ok_or_else(|| BaselineError::UnknownContext(context.to_string()))?;
    let local = |node: u32| members.binary_search(&node).ok();
    let adjacency: Vec<Vec<usize>> = members
        .iter()
        .map(|&u| graph.neighbors(u).iter().filter_map(|&v| local(v)).collect())
        .collect();

    let mut labels: Vec<Option<bool>> = vec![None; members.len()];
    let mut is_seed = vec![false; members.len()];
    for (entity, label) in seeds {
        let i = graph
            .index_of(entity.as_str())
            .and_then(local)
            .ok_or_else(|| BaselineError::SeedNodeMissing(entity.to_string()))?;
        labels[i] = Some(label.is_positive());
        is_seed[i] = true;
    }

    let votes = |labels: &[Option<bool>], i: usize| {
        adjacency[i].iter().fold((0usize, 0usize), |(p, n), &j| match labels[j] {
            Some(true) => (p + 1, n),
            Some(false) => (p, n + 1),
            None => (p, n),
        })
    };

    let mut rounds = 0;
    let mut updates = Vec::new();
    while rounds < max_rounds {
        updates.clear();
        for i in 0..members.len() {
            if labels[i].is_some() {
                continue;
            }
            let (pos, neg) = votes(&labels, i);
            if pos != neg {
                updates.push((i, pos > neg));
            }
        }
        if updates.is_empty() {
            break;
        }
        for &(i, l) in &updates {
            labels[i] = Some(l);
        }
        rounds += 1;
    }

    let mut state = LabelState {
        fixed: BTreeMap::new(),
        inferred: BTreeMap::new(),
        scores: BTreeMap::new(),
        rounds,
    };
    for (i, &node) in members.iter().enumerate() {
        let id = graph.node(node).clone();
        let score = if is_seed[i] {
            if labels[i] == Some(true) {
                1.0
            } else {
                0.0
            }
        } else {
            let (pos, neg) = votes(&labels, i);
            if pos + neg == 0 {
                0.5
            } else {
                pos as f64 / (pos + neg) as f64
            }
        };
        match (is_seed[i], labels[i]) {
            (true, Some(l)) => {
                state.fixed.insert(id.clone(), Label::from(l));
            }
            (false, Some(l)) => {
                state.inferred.insert(id.clone(), Label::from(l));
            }
            _ => {}
        }
        state.scores.insert(id, score);
    }
    Ok(state)
}
