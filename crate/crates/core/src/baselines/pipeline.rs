//! End-to-end baseline runs: fit on the train/valid folds of a split and
//! score every test sample.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::head::{predict_scores, train_linear_head, HeadConfig};
use super::labelprop::label_propagation;
use super::node2vec::{node2vec_walks, Node2VecConfig};
use super::skipgram::train_skipgram;
use super::BaselineError;
use crate::rng::SeededRng;
use crate::splits::{Fold, SplitSpec};
use crate::{ContextGraph, ContextId, ContextSample, EntityId, Label, PredictionRow, PredictionSet};

fn test_pairs(samples: &[ContextSample], split: &SplitSpec) -> Vec<(EntityId, ContextId)> {
    let mut pairs: Vec<_> = split
        .select(samples, Fold::Test)
        .into_iter()
        .map(|s| (s.entity.clone(), s.context.clone()))
        .collect();
    pairs.sort();
    pairs.dedup();
    pairs
}

/// Uniform random scores, the chance-level reference.
pub fn random_predictions(
    samples: &[ContextSample],
    split: &SplitSpec,
    seed: u64,
    dataset_ref: &str,
) -> Result<PredictionSet, BaselineError> {
    let mut rng = SeededRng::new(seed);
    let rows = test_pairs(samples, split)
        .into_iter()
        .map(|(e, c)| PredictionRow::new(e, c, rng.unit_f64()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PredictionSet::new(dataset_ref, rows)?)
}

/// Label propagation per context, seeded with the train and valid labels of
/// that context. A test entity outside the context's subgraph scores 0.5.
pub fn labelprop_predictions(
    graph: &ContextGraph,
    samples: &[ContextSample],
    split: &SplitSpec,
    max_rounds: usize,
    dataset_ref: &str,
) -> Result<PredictionSet, BaselineError> {
    let mut seeds: BTreeMap<&ContextId, BTreeMap<EntityId, Label>> = BTreeMap::new();
    for s in samples {
        if matches!(split.fold_of_sample(s), Some(Fold::Train | Fold::Valid)) {
            seeds.entry(&s.context).or_default().insert(s.entity.clone(), s.label);
        }
    }
    let pairs = test_pairs(samples, split);
    let contexts: BTreeSet<&ContextId> = pairs.iter().map(|(_, c)| c).collect();
    let empty = BTreeMap::new();
    let mut states = BTreeMap::new();
    for c in contexts {
        let state = label_propagation(graph, c, seeds.get(c).unwrap_or(&empty), max_rounds)?;
        states.insert(c.clone(), state);
    }
    let rows = pairs
        .into_iter()
        .map(|(e, c)| {
            let score = states[&c].scores.get(&e).copied().unwrap_or(0.5);
            PredictionRow::new(e, c, score)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PredictionSet::new(dataset_ref, rows)?)
}

/// Which graph node2vec walks on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingScope {
    /// One embedding of the whole reference graph; the context enters only
    /// through the head's one-hot block.
    #[default]
    Reference,
    /// Separate embeddings and head for each context's induced subgraph.
    PerContext,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Node2VecRun {
    pub walks: Node2VecConfig,
    pub head: HeadConfig,
    pub scope: EmbeddingScope,
}

/// node2vec embeddings followed by the one-hot-context logistic head.
pub fn node2vec_predictions(
    graph: &ContextGraph,
    samples: &[ContextSample],
    split: &SplitSpec,
    run: &Node2VecRun,
    dataset_ref: &str,
) -> Result<PredictionSet, BaselineError> {
    let pairs = test_pairs(samples, split);
    match run.scope {
        EmbeddingScope::Reference => {
            let walks = node2vec_walks(graph, &run.walks)?;
            let emb = train_skipgram(&walks, graph.nodes(), &run.walks)?;
            let contexts: Vec<ContextId> = samples.iter().map(|s| s.context.clone()).collect::<BTreeSet<_>>().into_iter().collect();
            let head = train_linear_head(&emb, samples, split, &contexts, &run.head)?;
            predict_scores(&head, &emb, &pairs, dataset_ref)
        }
        EmbeddingScope::PerContext => {
            let mut rows = Vec::with_capacity(pairs.len());
            let contexts: BTreeSet<&ContextId> = pairs.iter().map(|(_, c)| c).collect();
            for c in contexts {
                let sub = graph
                    .induced(c)
                    .ok_or_else(|| BaselineError::UnknownContext(alloc::string::ToString::to_string(c)))?;
                let walks = node2vec_walks(&sub, &run.walks)?;
                let emb = train_skipgram(&walks, sub.nodes(), &run.walks)?;
                let in_context: Vec<ContextSample> = samples.iter().filter(|s| &s.context == c).cloned().collect();
                let head = train_linear_head(&emb, &in_context, split, core::slice::from_ref(c), &run.head)?;
                let wanted: Vec<_> = pairs.iter().filter(|(_, pc)| pc == c).cloned().collect();
                rows.extend(predict_scores(&head, &emb, &wanted, dataset_ref)?.rows().iter().cloned());
            }
            Ok(PredictionSet::new(dataset_ref, rows)?)
        }
    }
}
