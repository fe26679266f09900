//! Benchmark groups: a registered dataset plus the split protocol, metric
//! suite and (optionally) the interaction graph used by graph baselines.
//!
//! Groups are stored in `<data_dir>/groups.json`.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use ctxbench_core::baselines::{
    labelprop_predictions, node2vec_predictions, random_predictions, BaselineError, Node2VecRun,
};
use ctxbench_core::datamodel::GraphBuilder;
use ctxbench_core::metrics::{evaluate, ContextSlices, NamedMetrics};
use ctxbench_core::splits::{
    cold_split, random_split, sample_key, stratified_split, temporal_split, ColdKey, SplitUnit,
};
use ctxbench_core::{
    ContextGraph, ContextId, ContextSample, DataError, Date, EntityId, Fold, Fractions, Label, MetricError,
    MetricReport, MetricSuite, PredictionSet, SplitError, SplitKind, SplitSpec, TrialRecord,
};
use serde::{Deserialize, Serialize};

use crate::io::{parse_trials, IoError};
use crate::registry::{DatasetManifest, DatasetRef, Registry, RegistryError, Table};

#[derive(Debug, thiserror::Error)]
pub enum GroupError {
    #[error("unknown group {0}")]
    UnknownGroup(String),
    #[error("group {0} already exists")]
    DuplicateGroup(String),
    #[error("invalid group: {0}")]
    Invalid(String),
    #[error("group {0} has no graph; graph baselines need one")]
    NoGraph(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Format(#[from] IoError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("corrupt group store: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How dataset rows become (entity, context, label) samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskFamily {
    /// Columns `entity`, `context`, `label`.
    Context,
    /// Columns `receptor`, `ligand`, `label`; the ligand plays the context.
    Binding,
    /// Trial table; the trial id is the entity and the phase the context.
    Trial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitParams {
    pub kind: SplitKind,
    #[serde(default)]
    pub fractions: Fractions,
    /// Held-out side for cold splits. Defaults to entities, or ligands for
    /// binding groups.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cold_key: Option<ColdKey>,
    /// Temporal cutoff; 2014-01-01 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<Date>,
}

impl SplitParams {
    pub fn cold() -> Self {
        Self {
            kind: SplitKind::Cold,
            fractions: Fractions::default(),
            cold_key: None,
            cutoff: None,
        }
    }
}

/// Edge list (`src,dst[,weight]`) and membership (`node,context`) datasets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSource {
    pub edges: DatasetRef,
    pub membership: DatasetRef,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkGroup {
    pub group_id: String,
    pub dataset: DatasetRef,
    pub family: TaskFamily,
    pub split: SplitParams,
    #[serde(default)]
    pub metrics: MetricSuite,
    /// Name of the metric leaderboards sort by, e.g. `ap@5_top10`.
    pub primary_metric: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSource>,
}

pub const DEFAULT_CUTOFF: &str = "2014-01-01";

/// Every metric name a suite can report.
pub fn metric_names(suite: &MetricSuite) -> Vec<String> {
    let mut names = Vec::new();
    for k in &suite.top_k {
        names.push(format!("auroc_top{k}"));
        for r in &suite.ranks {
            names.push(format!("ap@{r}_top{k}"));
        }
    }
    for r in &suite.ranks {
        names.push(format!("ap@{r}_cf"));
    }
    names.extend(["auroc_cf", "auprc_cf", "acc_cf", "f1_cf"].map(String::from));
    names.sort();
    names
}

impl BenchmarkGroup {
    pub fn validate(&self) -> Result<(), GroupError> {
        if self.group_id.is_empty() || self.group_id.contains('/') {
            return Err(GroupError::Invalid("group_id must be non-empty and contain no '/'".into()));
        }
        self.metrics.validate()?;
        let f = self.split.fractions;
        Fractions::new(f.train, f.valid, f.test)?;
        if !metric_names(&self.metrics).contains(&self.primary_metric) {
            return Err(GroupError::Invalid(format!(
                "primary metric {:?} is not produced by the metric suite",
                self.primary_metric
            )));
        }
        if self.split.kind == SplitKind::Temporal && self.family != TaskFamily::Trial {
            return Err(GroupError::Invalid("temporal splits need a trial dataset".into()));
        }
        Ok(())
    }

    fn dataset_label(&self) -> String {
        self.dataset.to_string()
    }
}

/// A group with its rows loaded.
#[derive(Clone, Debug)]
pub struct GroupData {
    pub group: BenchmarkGroup,
    pub manifest: DatasetManifest,
    pub samples: Vec<ContextSample>,
    pub trials: Option<Vec<TrialRecord>>,
}

fn column(t: &Table, name: &str) -> Result<usize, GroupError> {
    t.column_index(name)
        .ok_or_else(|| GroupError::Format(IoError::MissingColumn(name.to_string())))
}

fn samples_from_table(t: &Table, cols: [&str; 3]) -> Result<Vec<ContextSample>, GroupError> {
    let [e, c, l] = [column(t, cols[0])?, column(t, cols[1])?, column(t, cols[2])?];
    let mut out = Vec::with_capacity(t.rows.len());
    for (i, row) in t.rows.iter().enumerate() {
        let line = i as u64 + 2;
        let at = |err: DataError| IoError::row(line, err);
        out.push(ContextSample::new(
            EntityId::new(row[e].trim()).map_err(at)?,
            ContextId::new(row[c].trim()).map_err(at)?,
            Label::parse(&row[l]).map_err(at)?,
        ));
    }
    ctxbench_core::datamodel::check_unique_samples(&out)?;
    Ok(out)
}

impl GroupData {
    pub fn load(registry: &Registry, group: &BenchmarkGroup) -> Result<Self, GroupError> {
        let manifest = registry.manifest(&group.dataset.name, Some(group.dataset.version))?;
        let bytes = registry.read_bytes(&manifest)?;
        let (samples, trials) = match group.family {
            TaskFamily::Context => (samples_from_table(&Table::from_csv(bytes.as_slice())?, ["entity", "context", "label"])?, None),
            TaskFamily::Binding => (samples_from_table(&Table::from_csv(bytes.as_slice())?, ["receptor", "ligand", "label"])?, None),
            TaskFamily::Trial => {
                let trials = parse_trials(bytes.as_slice())?;
                let samples = trials
                    .iter()
                    .map(|t| {
                        Ok(ContextSample::new(
                            t.trial_id.clone(),
                            ContextId::new(t.phase.to_string())?,
                            t.label,
                        ))
                    })
                    .collect::<Result<Vec<_>, DataError>>()?;
                (samples, Some(trials))
            }
        };
        Ok(Self {
            group: group.clone(),
            manifest,
            samples,
            trials,
        })
    }

    pub fn split(&self, seed: u64) -> Result<SplitSpec, GroupError> {
        let p = &self.group.split;
        let spec = match p.kind {
            SplitKind::Cold => {
                let key = p.cold_key.unwrap_or(match self.group.family {
                    TaskFamily::Binding => ColdKey::Context,
                    _ => ColdKey::Entity,
                });
                cold_split(&self.samples, p.fractions, seed, key)?
            }
            SplitKind::Temporal => {
                let trials = self
                    .trials
                    .as_ref()
                    .ok_or_else(|| GroupError::Invalid("temporal splits need a trial dataset".into()))?;
                let cutoff = p.cutoff.unwrap_or_else(|| DEFAULT_CUTOFF.parse().expect("valid date"));
                temporal_split(trials, cutoff, seed)?
            }
            SplitKind::Stratified => stratified_split(&self.samples, p.fractions.test, seed)?,
            SplitKind::Random => {
                let keys: Vec<String> = self.samples.iter().map(sample_key).collect();
                random_split(&keys, p.fractions, seed, SplitUnit::Sample)
            }
        };
        Ok(spec)
    }

    pub fn fold(&self, split: &SplitSpec, fold: Fold) -> Vec<ContextSample> {
        split.select(&self.samples, fold).into_iter().cloned().collect()
    }

    /// Joins predictions to the held-out labels of `seed`'s test fold and
    /// runs the group's metric suite.
    pub fn evaluate(&self, seed: u64, preds: &PredictionSet) -> Result<MetricReport, GroupError> {
        let split = self.split(seed)?;
        let test = self.fold(&split, Fold::Test);
        let slices = ContextSlices::join(preds, &test)?;
        Ok(evaluate(&slices, &self.group.metrics, seed)?)
    }

    pub fn primary(&self, report: &MetricReport) -> Option<f64> {
        report.named_metrics().get(&self.group.primary_metric).copied()
    }

    pub fn load_graph(&self, registry: &Registry) -> Result<ContextGraph, GroupError> {
        let src = self
            .group
            .graph
            .as_ref()
            .ok_or_else(|| GroupError::NoGraph(self.group.group_id.clone()))?;
        let (_, edges) = registry.read_table(&src.edges.name, Some(src.edges.version))?;
        let (_, members) = registry.read_table(&src.membership.name, Some(src.membership.version))?;
        graph_from_tables(&edges, &members)
    }

    pub fn run_baseline(
        &self,
        registry: &Registry,
        baseline: Baseline,
        seed: u64,
        node2vec: &Node2VecRun,
    ) -> Result<PredictionSet, GroupError> {
        let split = self.split(seed)?;
        let label = self.group.dataset_label();
        let preds = match baseline {
            Baseline::Random => random_predictions(&self.samples, &split, seed, &label)?,
            Baseline::Labelprop => {
                let g = self.load_graph(registry)?;
                labelprop_predictions(&g, &self.samples, &split, g.node_count().max(1), &label)?
            }
            Baseline::Node2vec => {
                let g = self.load_graph(registry)?;
                let mut run = node2vec.clone();
                run.walks.seed = seed;
                node2vec_predictions(&g, &self.samples, &split, &run, &label)?
            }
        };
        Ok(preds)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Labelprop,
    Node2vec,
    Random,
}

/// Builds a graph from `src,dst[,weight]` and `node,context` tables. Every
/// membership node must appear in the edge table.
pub fn graph_from_tables(edges: &Table, membership: &Table) -> Result<ContextGraph, GroupError> {
    let (s, d) = (column(edges, "src")?, column(edges, "dst")?);
    let w = edges.column_index("weight");
    let mut b = GraphBuilder::new();
    let mut known = std::collections::BTreeSet::new();
    for (i, row) in edges.rows.iter().enumerate() {
        let line = i as u64 + 2;
        let a = EntityId::new(row[s].trim()).map_err(|e| IoError::row(line, e))?;
        let weight = match w.map(|w| row[w].trim()).filter(|v| !v.is_empty()) {
            Some(v) => Some(v.parse::<f64>().map_err(|_| IoError::row(line, format!("weight {v:?}")))?),
            None => None,
        };
        if row[d].trim().is_empty() {
            b.add_node(&a);
        } else {
            let c = EntityId::new(row[d].trim()).map_err(|e| IoError::row(line, e))?;
            b.add_edge(&a, &c, weight)?;
            known.insert(c);
        }
        known.insert(a);
    }
    let (n, c) = (column(membership, "node")?, column(membership, "context")?);
    for (i, row) in membership.rows.iter().enumerate() {
        let line = i as u64 + 2;
        let node = EntityId::new(row[n].trim()).map_err(|e| IoError::row(line, e))?;
        if !known.contains(&node) {
            return Err(DataError::UnknownNode(node.to_string()).into());
        }
        let ctx = ContextId::new(row[c].trim()).map_err(|e| IoError::row(line, e))?;
        b.add_membership(&node, &ctx);
    }
    Ok(b.build())
}

/// Edge and membership tables for a graph, the inverse of [`graph_from_tables`].
pub fn graph_tables(g: &ContextGraph) -> (Table, Table) {
    let mut edges = Table::new(vec!["src".into(), "dst".into(), "weight".into()]);
    for i in 0..g.node_count() as u32 {
        if g.degree(i) == 0 {
            edges.rows.push(vec![g.node(i).to_string(), String::new(), String::new()]);
        }
    }
    for (a, b, w) in g.edges() {
        edges.rows.push(vec![g.node(a).to_string(), g.node(b).to_string(), w.to_string()]);
    }
    let mut members = Table::new(vec!["node".into(), "context".into()]);
    let contexts: Vec<ContextId> = g.contexts().cloned().collect();
    for c in &contexts {
        for &i in g.context_members(c).unwrap_or(&[]) {
            members.rows.push(vec![g.node(i).to_string(), c.to_string()]);
        }
    }
    (edges, members)
}

/// The group catalog file.
#[derive(Clone, Debug)]
pub struct GroupStore {
    path: PathBuf,
}

impl GroupStore {
    pub fn open(data_dir: &Path) -> Result<Self, GroupError> {
        fs::create_dir_all(data_dir)?;
        Ok(Self {
            path: data_dir.join("groups.json"),
        })
    }

    fn load(&self) -> Result<BTreeMap<String, BenchmarkGroup>, GroupError> {
        match fs::read(&self.path) {
            Ok(b) => serde_json::from_slice(&b).map_err(|e| GroupError::Corrupt(e.to_string())),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(BTreeMap::new()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn list(&self) -> Result<Vec<BenchmarkGroup>, GroupError> {
        Ok(self.load()?.into_values().collect())
    }

    pub fn get(&self, id: &str) -> Result<BenchmarkGroup, GroupError> {
        self.load()?
            .remove(id)
            .ok_or_else(|| GroupError::UnknownGroup(id.to_string()))
    }

    /// Adds a group after checking that its datasets exist. With `replace`
    /// an existing definition is overwritten.
    pub fn add(&self, registry: &Registry, group: BenchmarkGroup, replace: bool) -> Result<BenchmarkGroup, GroupError> {
        group.validate()?;
        registry.manifest(&group.dataset.name, Some(group.dataset.version))?;
        if let Some(g) = &group.graph {
            registry.manifest(&g.edges.name, Some(g.edges.version))?;
            registry.manifest(&g.membership.name, Some(g.membership.version))?;
        }
        let lock_path = self.path.with_extension("lock");
        let lock = OpenOptions::new().create(true).truncate(false).write(true).open(lock_path)?;
        lock.lock()?;
        let mut all = self.load()?;
        if all.contains_key(&group.group_id) && !replace {
            return Err(GroupError::DuplicateGroup(group.group_id));
        }
        all.insert(group.group_id.clone(), group.clone());
        let tmp = self.path.with_extension("json.tmp");
        let mut f = File::create(&tmp)?;
        f.write_all(&serde_json::to_vec_pretty(&all).expect("serializable groups"))?;
        f.sync_all()?;
        fs::rename(tmp, &self.path)?;
        Ok(group)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_names_match_report_keys() {
        let suite = MetricSuite::default();
        let names = metric_names(&suite);
        assert!(names.contains(&"ap@5_top10".to_string()));
        assert!(names.contains(&"auroc_cf".to_string()));
        assert_eq!(names.len(), 4 + 4 * 2 + 2 + 4);
    }

    #[test]
    fn graph_table_round_trip() {
        let mut edges = Table::new(vec!["src".into(), "dst".into()]);
        edges.rows = vec![vec!["a".into(), "b".into()], vec!["b".into(), "c".into()], vec!["z".into(), "".into()]];
        let mut members = Table::new(vec!["node".into(), "context".into()]);
        members.rows = vec![vec!["a".into(), "ct".into()], vec!["z".into(), "ct".into()]];
        let g = graph_from_tables(&edges, &members).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (4, 2));
        let (e2, m2) = graph_tables(&g);
        let g2 = graph_from_tables(&e2, &m2).unwrap();
        assert_eq!((g2.node_count(), g2.edge_count()), (4, 2));
        members.rows.push(vec!["nope".into(), "ct".into()]);
        assert!(matches!(graph_from_tables(&edges, &members), Err(GroupError::Data(DataError::UnknownNode(_)))));
    }
}
