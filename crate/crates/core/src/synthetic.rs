//! Seeded synthetic data: a planted-partition interaction graph with
//! per-context node activation and a positive "pathway" made of a few
//! communities.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::datamodel::GraphBuilder;
use crate::rng::SeededRng;
use crate::{ContextGraph, ContextId, ContextSample, EntityId, Label};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedPartitionConfig {
    pub nodes: usize,
    pub communities: usize,
    pub contexts: usize,
    /// Communities whose nodes are positive.
    pub pathway_communities: usize,
    /// Expected number of same-community neighbors per node.
    pub intra_degree: f64,
    /// Expected number of cross-community neighbors per node.
    pub inter_degree: f64,
    /// Probability that a non-pathway node is active in a context.
    pub coverage: f64,
    /// Probability that a pathway node is active in a context. Lower values
    /// break the pathway into disconnected fragments inside each context.
    pub pathway_coverage: f64,
    pub seed: u64,
}

impl Default for PlantedPartitionConfig {
    fn default() -> Self {
        Self {
            nodes: 600,
            communities: 30,
            contexts: 6,
            pathway_communities: 8,
            intra_degree: 2.0,
            inter_degree: 0.5,
            coverage: 0.4,
            pathway_coverage: 0.25,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlantedPartition {
    pub graph: ContextGraph,
    /// One sample per (active node, context); positive iff the node is on the pathway.
    pub samples: Vec<ContextSample>,
    pub pathway: BTreeSet<EntityId>,
}

pub fn node_name(i: usize) -> EntityId {
    EntityId::new(format!("g{i:05}")).expect("non-empty")
}

pub fn context_name(i: usize) -> ContextId {
    ContextId::new(format!("ctx{i:02}")).expect("non-empty")
}

/// Nodes are assigned round-robin to communities; community `k` is on the
/// pathway when `k < pathway_communities`. Every context keeps at least one
/// node.
pub fn planted_partition(cfg: &PlantedPartitionConfig) -> PlantedPartition {
    let n = cfg.nodes;
    let m = cfg.communities.max(1);
    let mut rng = SeededRng::new(cfg.seed);
    let community = |i: usize| i % m;
    let ids: Vec<EntityId> = (0..n).map(node_name).collect();
    let mut b = GraphBuilder::new();
    for id in &ids {
        b.add_node(id);
    }
    let size = (n as f64 / m as f64).max(1.0);
    let p_in = (cfg.intra_degree / (size - 1.0).max(1.0)).min(1.0);
    let p_out = (cfg.inter_degree / (n as f64 - size).max(1.0)).min(1.0);
    for i in 0..n {
        for j in i + 1..n {
            let p = if community(i) == community(j) { p_in } else { p_out };
            if rng.unit_f64() < p {
                // distinct declared nodes, unit weight
                let _ = b.add_edge(&ids[i], &ids[j], None);
            }
        }
    }
    let on_pathway = |i: usize| community(i) < cfg.pathway_communities;
    let mut samples = Vec::new();
    for c in 0..cfg.contexts {
        let ctx = context_name(c);
        let mut any = false;
        for (i, id) in ids.iter().enumerate() {
            let keep = if on_pathway(i) { cfg.pathway_coverage } else { cfg.coverage };
            if rng.unit_f64() < keep {
                b.add_membership(id, &ctx);
                samples.push(ContextSample::new(id.clone(), ctx.clone(), Label::from(on_pathway(i))));
                any = true;
            }
        }
        if !any && n > 0 {
            let i = rng.index(n);
            b.add_membership(&ids[i], &ctx);
            samples.push(ContextSample::new(ids[i].clone(), ctx.clone(), Label::from(on_pathway(i))));
        }
    }
    PlantedPartition {
        graph: b.build(),
        samples,
        pathway: (0..n).filter(|&i| on_pathway(i)).map(|i| ids[i].clone()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let cfg = PlantedPartitionConfig::default();
        let a = planted_partition(&cfg);
        assert_eq!(a.graph.node_count(), 600);
        assert_eq!(a.graph.contexts().count(), 6);
        assert_eq!(a.pathway.len(), 160);
        let b = planted_partition(&cfg);
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.graph.edges().collect::<Vec<_>>(), b.graph.edges().collect::<Vec<_>>());
        let mean_degree = 2.0 * a.graph.edge_count() as f64 / 600.0;
        assert!((mean_degree - 2.5).abs() < 0.4, "{mean_degree}");
    }
}
