use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::ToString;
use alloc::vec::Vec;

use super::{ContextId, DataError, EntityId};

/// Undirected reference interaction graph plus per-context node activation.
///
/// Adjacency is stored in CSR form with each neighbor list sorted, so edge
/// membership is a binary search.
#[derive(Clone, Debug)]
pub struct ContextGraph {
    nodes: Vec<EntityId>,
    index: BTreeMap<EntityId, u32>,
    offsets: Vec<usize>,
    adjacency: Vec<u32>,
    weights: Vec<f64>,
    edge_count: usize,
    contexts: BTreeMap<ContextId, Vec<u32>>,
}

#[derive(Default)]
pub struct GraphBuilder {
    nodes: Vec<EntityId>,
    index: BTreeMap<EntityId, u32>,
    edges: BTreeMap<(u32, u32), f64>,
    contexts: BTreeMap<ContextId, BTreeSet<u32>>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: &EntityId) -> u32 {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.nodes.len() as u32;
        self.nodes.push(id.clone());
        self.index.insert(id.clone(), i);
        i
    }

    /// Adds an undirected edge, creating endpoints as needed. Returns false
    /// when the edge was already present (the first weight is kept).
    pub fn add_edge(&mut self, a: &EntityId, b: &EntityId, weight: Option<f64>) -> Result<bool, DataError> {
        if a == b {
            return Err(DataError::SelfLoop(a.to_string()));
        }
        let w = weight.unwrap_or(1.0);
        if !(w.is_finite() && w > 0.0) {
            return Err(DataError::NonPositiveWeight(w));
        }
        let (i, j) = (self.add_node(a), self.add_node(b));
        let key = (i.min(j), i.max(j));
        if self.edges.contains_key(&key) {
            return Ok(false);
        }
        self.edges.insert(key, w);
        Ok(true)
    }

    pub fn add_membership(&mut self, node: &EntityId, context: &ContextId) {
        let i = self.add_node(node);
        self.contexts.entry(context.clone()).or_default().insert(i);
    }

    pub fn build(self) -> ContextGraph {
        let n = self.nodes.len();
        let mut degree = alloc::vec![0usize; n];
        for &(a, b) in self.edges.keys() {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = *offsets.last().unwrap();
        let mut adjacency = alloc::vec![0u32; total];
        let mut weights = alloc::vec![0.0f64; total];
        let mut fill = offsets[..n].to_vec();
        for (&(a, b), &w) in &self.edges {
            for (u, v) in [(a, b), (b, a)] {
                let slot = fill[u as usize];
                adjacency[slot] = v;
                weights[slot] = w;
                fill[u as usize] += 1;
            }
        }
        for u in 0..n {
            let (lo, hi) = (offsets[u], offsets[u + 1]);
            let mut pairs: Vec<(u32, f64)> = adjacency[lo..hi]
                .iter()
                .copied()
                .zip(weights[lo..hi].iter().copied())
                .collect();
            pairs.sort_by_key(|p| p.0);
            for (k, (v, w)) in pairs.into_iter().enumerate() {
                adjacency[lo + k] = v;
                weights[lo + k] = w;
            }
        }
        ContextGraph {
            nodes: self.nodes,
            index: self.index,
            offsets,
            adjacency,
            weights,
            edge_count: self.edges.len(),
            contexts: self
                .contexts
                .into_iter()
                .map(|(c, set)| (c, set.into_iter().collect()))
                .collect(),
        }
    }
}

impl ContextGraph {
    /// Strict constructor: every edge endpoint and member must be a declared
    /// node, and every context must have at least one member.
    pub fn from_parts(
        nodes: &[EntityId],
        edges: &[(EntityId, EntityId, Option<f64>)],
        membership: &BTreeMap<ContextId, Vec<EntityId>>,
    ) -> Result<Self, DataError> {
        let mut b = GraphBuilder::new();
        for n in nodes {
            b.add_node(n);
        }
        let known = |id: &EntityId, b: &GraphBuilder| {
            if b.index.contains_key(id) {
                Ok(())
            } else {
                Err(DataError::UnknownNode(id.to_string()))
            }
        };
        for (x, y, w) in edges {
            known(x, &b)?;
            known(y, &b)?;
            b.add_edge(x, y, *w)?;
        }
        for (ctx, members) in membership {
            if members.is_empty() {
                return Err(DataError::EmptyContext(ctx.to_string()));
            }
            for m in members {
                known(m, &b)?;
                b.add_membership(m, ctx);
            }
        }
        Ok(b.build())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn nodes(&self) -> &[EntityId] {
        &self.nodes
    }

    pub fn node(&self, i: u32) -> &EntityId {
        &self.nodes[i as usize]
    }

    pub fn index_of(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    pub fn neighbors(&self, i: u32) -> &[u32] {
        let i = i as usize;
        &self.adjacency[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn neighbor_weights(&self, i: u32) -> &[f64] {
        let i = i as usize;
        &self.weights[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn degree(&self, i: u32) -> usize {
        let i = i as usize;
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Raw CSR arrays: row offsets (one per node plus a terminator), sorted
    /// neighbor indices and the matching weights.
    pub fn csr(&self) -> (&[usize], &[u32], &[f64]) {
        (&self.offsets, &self.adjacency, &self.weights)
    }

    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.neighbors(a).binary_search(&b).is_ok()
    }

    /// Each undirected edge once, as `(low, high, weight)`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        (0..self.nodes.len() as u32).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .zip(self.neighbor_weights(u))
                .filter(move |(&v, _)| v > u)
                .map(move |(&v, &w)| (u, v, w))
        })
    }

    pub fn contexts(&self) -> impl Iterator<Item = &ContextId> {
        self.contexts.keys()
    }

    /// Sorted member node indices of a context.
    pub fn context_members(&self, context: &ContextId) -> Option<&[u32]> {
        self.contexts.get(context).map(|v| v.as_slice())
    }

    /// The subgraph induced by a context's members. Node ids are preserved;
    /// indices are not.
    pub fn induced(&self, context: &ContextId) -> Option<ContextGraph> {
        let members = self.context_members(context)?;
        let mut b = GraphBuilder::new();
        for &m in members {
            b.add_membership(self.node(m), context);
        }
        for &u in members {
            for (&v, &w) in self.neighbors(u).iter().zip(self.neighbor_weights(u)) {
                if v > u && members.binary_search(&v).is_ok() {
                    // both endpoints known and distinct, cannot fail
                    let _ = b.add_edge(self.node(u), self.node(v), Some(w));
                }
            }
        }
        Some(b.build())
    }
}
