//! Graph baselines: neighborhood-majority label propagation and node2vec
//! embeddings scored by a logistic head over `[embedding ‖ one-hot(context)]`.

mod alias;
mod embedding;
mod head;
mod kernels;
mod labelprop;
mod node2vec;
mod pipeline;
mod skipgram;

use alloc::string::String;

use crate::DataError;

pub use alias::{AliasTable, NeighborAlias};
pub use embedding::{cosine, EmbeddingTable};
pub use head::{head_loss_grad, predict_scores, score_pairs, train_linear_head, HeadConfig, LinearHead};
pub use kernels::{Kernel, Portable};
pub use labelprop::{label_propagation, LabelState};
pub use node2vec::{node2vec_walks, round_order, walk_stream, Node2VecConfig, WalkSampler};
pub use pipeline::{
    labelprop_predictions, node2vec_predictions, random_predictions, EmbeddingScope, Node2VecRun,
};
pub use skipgram::{
    dot, pair_loss, sgns_step, sigmoid, softplus, train_skipgram, train_skipgram_traced,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BaselineError {
    #[error("unknown context {0}")]
    UnknownContext(String),
    #[error("seed node {0} is not in the context subgraph")]
    SeedNodeMissing(String),
    #[error("no tokens to train on")]
    EmptyCorpus,
    #[error("walk token {0} is outside the vocabulary")]
    InvalidWalk(u32),
    #[error("no embedding for entity {0}")]
    MissingEmbedding(String),
    #[error("expected dimension {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("embedding for {0} has non-finite entries")]
    NonFiniteEmbedding(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("the train fold is empty")]
    NoTrainingSamples,
    #[error(transparent)]
    Data(#[from] DataError),
}
