use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::alias::NeighborAlias;
use super::BaselineError;
use crate::rng::SeededRng;
use crate::ContextGraph;

/// Walk and skip-gram hyperparameters. Defaults are the usual node2vec ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Node2VecConfig {
    pub dim: usize,
    pub walks_per_node: usize,
    pub walk_length: usize,
    /// Maximum context window on each side of a token.
    pub window: usize,
    /// Return parameter: stepping back to the previous node has weight `1 / return_param`.
    pub return_param: f64,
    /// In-out parameter: moving away from the previous node has weight `1 / inout_param`.
    pub inout_param: f64,
    /// Noise samples per positive pair.
    pub negatives: usize,
    pub epochs: usize,
    /// The learning rate decays linearly from `lr_start` to `lr_end` over training.
    pub lr_start: f64,
    pub lr_end: f64,
    pub seed: u64,
}

impl Default for Node2VecConfig {
    fn default() -> Self {
        Self {
            dim: 128,
            walks_per_node: 10,
            walk_length: 80,
            window: 10,
            return_param: 1.0,
            inout_param: 1.0,
            negatives: 5,
            epochs: 1,
            lr_start: 0.025,
            lr_end: 0.0001,
            seed: 0,
        }
    }
}

/// Upper bound on noise samples per pair.
pub const MAX_NEGATIVES: usize = 64;

impl Node2VecConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        let counts = [
            ("dim", self.dim),
            ("walks_per_node", self.walks_per_node),
            ("walk_length", self.walk_length),
            ("window", self.window),
            ("negatives", self.negatives),
            ("epochs", self.epochs),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(BaselineError::InvalidConfig(name));
        }
        if self.negatives > MAX_NEGATIVES {
            return Err(BaselineError::InvalidConfig("negatives above 64"));
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.return_param) {
            return Err(BaselineError::InvalidConfig("return_param"));
        }
        if !positive(self.inout_param) {
            return Err(BaselineError::InvalidConfig("inout_param"));
        }
        if !positive(self.lr_start) || !positive(self.lr_end) || self.lr_end > self.lr_start {
            return Err(BaselineError::InvalidConfig("learning rate"));
        }
        Ok(())
    }
}

/// Second-order biased walker.
///
/// Each node keeps a first-order alias table over its edge weights. The
/// return / in-out bias is applied exactly by rejection: a proposal `x` drawn
/// from the first-order table is accepted with probability
/// `bias(prev, x) / max_bias`. With both parameters at 1 every proposal is
/// accepted. Memory is O(V + E) instead of one table per directed edge.
pub struct WalkSampler<'g> {
    graph: &'g ContextGraph,
    alias: NeighborAlias,
    return_bias: f64,
    inout_bias: f64,
    max_bias: f64,
}

impl<'g> WalkSampler<'g> {
    pub fn new(graph: &'g ContextGraph, return_param: f64, inout_param: f64) -> Self {
        let (offsets, _, weights) = graph.csr();
        let return_bias = 1.0 / return_param;
        let inout_bias = 1.0 / inout_param;
        Self {
            graph,
            alias: NeighborAlias::build(offsets, weights),
            return_bias,
            inout_bias,
            max_bias: return_bias.max(inout_bias).max(1.0),
        }
    }

    fn unbiased(&self) -> bool {
        self.return_bias == 1.0 && self.inout_bias == 1.0
    }

    /// Unnormalized second-order weight factor for moving `prev -> cur -> next`.
    pub fn bias(&self, prev: u32, next: u32) -> f64 {
        if next == prev {
            self.return_bias
        } else if self.graph.has_edge(prev, next) {
            1.0
        } else {
            self.inout_bias
        }
    }

    /// Next node after `cur`, given the node visited before it.
    #[inline]
    pub fn step(&self, prev: Option<u32>, cur: u32, rng: &mut SeededRng) -> Option<u32> {
        let neighbors = self.graph.neighbors(cur);
        loop {
            let next = neighbors[self.alias.sample(cur as usize, rng)?];
            match prev {
                Some(prev) if !self.unbiased() => {
                    if rng.unit_f64() * self.max_bias < self.bias(prev, next) {
                        return Some(next);
                    }
                }
                _ => return Some(next),
            }
        }
    }

    /// Appends a walk of up to `len` nodes starting at `start`. A node with no
    /// neighbors yields the one-node walk.
    pub fn walk_into(&self, start: u32, len: usize, rng: &mut SeededRng, out: &mut Vec<u32>) {
        if len == 0 {
            return;
        }
        out.push(start);
        let (mut prev, mut cur) = (None, start);
        for _ in 1..len {
            match self.step(prev, cur, rng) {
                Some(next) => {
                    prev = Some(cur);
                    cur = next;
                    out.push(next);
                }
                None => break,
            }
        }
    }
}

/// Stream id of the walk started from `node` in round `round`.
pub fn walk_stream(round: usize, node: u32) -> u64 {
    ((round as u64) << 32) | node as u64
}

/// Order in which round `round` visits start nodes: a seeded permutation.
pub fn round_order(node_count: usize, round: usize, seed: u64) -> Vec<u32> {
    let mut order: Vec<u32> = (0..node_count as u32).collect();
    SeededRng::with_stream(seed, u64::MAX - round as u64).shuffle(&mut order);
    order
}

/// `walks_per_node` rounds, each starting one walk from every node in a
/// seeded order. Every walk has its own random stream, so walks can be
/// generated in any order or in parallel with identical results.
pub fn node2vec_walks(graph: &ContextGraph, cfg: &Node2VecConfig) -> Result<Vec<Vec<u32>>, BaselineError> {
    cfg.validate()?;
    let sampler = WalkSampler::new(graph, cfg.return_param, cfg.inout_param);
    let mut walks = Vec::with_capacity(graph.node_count() * cfg.walks_per_node);
    for round in 0..cfg.walks_per_node {
        for node in round_order(graph.node_count(), round, cfg.seed) {
            let mut rng = SeededRng::with_stream(cfg.seed, walk_stream(round, node));
            let mut walk = Vec::with_capacity(cfg.walk_length);
            sampler.walk_into(node, cfg.walk_length, &mut rng, &mut walk);
            walks.push(walk);
        }
    }
    Ok(walks)
}
