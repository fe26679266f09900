//! Context-sliced benchmark evaluation core.
//!
//! Everything in this crate is pure computation over in-memory records: typed
//! samples and graphs, the per-context ranking metrics and their top-K
//! aggregates, seeded split generators, negative sampling for binding pairs,
//! and the two graph baselines (neighborhood label propagation and node2vec
//! with a one-hot-context logistic head).
//!
//! The crate is `no_std` and only needs `alloc`. The optional `std` feature
//! enables runtime CPU detection for the embedding kernels. File formats, the dataset
//! registry, the HTTP service and the CLI live in the `ctxbench` crate.

#![no_std]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod baselines;
pub mod datamodel;
pub mod metrics;
pub mod rng;
pub mod splits;
pub mod synthetic;

pub use datamodel::{
    BindingPair, Condition, ContextGraph, ContextId, ContextSample, DataError, Date, EntityId,
    ExpressionMatrix, Label, Phase, PredictionRow, PredictionSet, TrialRecord,
};
pub use metrics::{MetricError, MetricReport, MetricSuite};
pub use splits::{Fold, Fractions, SplitError, SplitKind, SplitSpec};

