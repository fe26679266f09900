//! The `bench` command line. Every command prints the JSON serialization of
//! the library value it wraps; `--human` switches to a table where one makes
//! sense.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error or unknown group.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ctxbench_core::baselines::Node2VecRun;
use ctxbench_core::metrics::SeedAggregate;
use ctxbench_core::splits::ColdKey;
use ctxbench_core::synthetic::{planted_partition, PlantedPartitionConfig};
use ctxbench_core::{Fractions, MetricReport, MetricSuite, SplitKind, SplitSpec};
use serde::{Deserialize, Serialize};

use crate::config::{Config, CONFIG_ENV};
use crate::groups::{
    graph_tables, Baseline, BenchmarkGroup, GraphSource, GroupData, GroupError, GroupStore, SplitParams, TaskFamily,
};
use crate::hash::canonical_json;
use crate::io::{parse_predictions, write_predictions, Format};
use crate::leaderboard::{aggregate_common, Leaderboards};
use crate::registry::fetch::{build_fetcher, FetcherKind, UreqTransport};
use crate::registry::{DataViewConfig, DatasetManifest, DatasetRef, FetchMode, FetcherSpec, Registry, RegistryError, Schema, Table};

#[derive(Parser, Debug)]
#[command(name = "bench", version, about = "Context-sliced benchmark datasets, splits, baselines and evaluation")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Data directory; overrides the configuration.
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    /// Print tables instead of JSON.
    #[arg(long, global = true)]
    pub human: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a baseline on several seeds, evaluate, and aggregate.
    Run(RunArgs),
    /// Score a predictions file against a group's test fold.
    Evaluate(EvaluateArgs),
    /// Dataset registry operations.
    #[command(subcommand)]
    Registry(RegistryCommand),
    /// Benchmark group definitions.
    #[command(subcommand)]
    Group(GroupCommand),
    /// Split generation.
    #[command(subcommand)]
    Split(SplitCommand),
    /// Synthetic data generators.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Ranked submissions of a group.
    Leaderboard { group: String },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        bind: Option<String>,
    },
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub group: String,
    #[arg(long, value_enum)]
    pub baseline: Baseline,
    #[arg(long, num_args = 1.., default_values_t = [0u64])]
    pub seeds: Vec<u64>,
    /// Directory for per-seed reports, predictions and the aggregate.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with node2vec walk, head and scope settings.
    #[arg(long)]
    pub node2vec_config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub group: String,
    /// CSV (`entity,context,score`) or JSONL predictions.
    #[arg(long)]
    pub preds: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also record the report on the group's leaderboard under this id.
    #[arg(long)]
    pub submit: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum RegistryCommand {
    /// Register a CSV file as the next version of NAME.
    Add {
        name: String,
        file: PathBuf,
        /// Parent dataset as `name@version`.
        #[arg(long)]
        parent: Option<String>,
        /// JSON object mapping column names to `integer`, `number` or `text`.
        #[arg(long)]
        schema: Option<PathBuf>,
    },
    /// Run a data view config and register the output.
    View {
        /// JSON view config.
        #[arg(value_name = "VIEW")]
        view_file: PathBuf,
        /// Name of the derived dataset.
        #[arg(long)]
        output: String,
        /// JSON map of lookup keys to sequences.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Cache directory for live lookups.
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Parent chain of a dataset version, root first.
    Lineage { name: String, version: u32 },
    /// Every registered dataset version.
    List,
    /// Stream rows as JSON lines.
    Rows {
        name: String,
        #[arg(long)]
        version: Option<u32>,
        #[arg(long)]
        filter: Option<String>,
        #[arg(long, default_value_t = 1000)]
        chunk_size: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum GroupCommand {
    /// Add a group from a JSON definition.
    Add {
        file: PathBuf,
        #[arg(long)]
        replace: bool,
    },
    List,
    Show { group: String },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KindArg {
    Cold,
    Temporal,
    Stratified,
    Random,
}

impl From<KindArg> for SplitKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Cold => SplitKind::Cold,
            KindArg::Temporal => SplitKind::Temporal,
            KindArg::Stratified => SplitKind::Stratified,
            KindArg::Random => SplitKind::Random,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum SplitCommand {
    /// Write the split of a group's dataset for one seed.
    Make {
        #[arg(long)]
        group: String,
        /// Overrides the group's split kind.
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum SynthCommand {
    /// Planted-partition graph with per-context samples, registered as
    /// NAME, NAME-edges and NAME-members plus a group NAME.
    Planted {
        #[arg(long, default_value = "planted")]
        name: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long)]
        contexts: Option<usize>,
    },
}

/// A command failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn domain(e: impl ToString) -> Self {
        Self {
            code: 1,
            message: e.to_string(),
        }
    }

    fn usage(e: impl ToString) -> Self {
        Self {
            code: 2,
            message: e.to_string(),
        }
    }
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> Self {
        match e {
            GroupError::UnknownGroup(_) => Self::usage(e),
            GroupError::Registry(r) => r.into(),
            other => Self::domain(other),
        }
    }
}

impl From<RegistryError> for CliError {
    fn from(e: RegistryError) -> Self {
        Self::domain(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::domain(e)
    }
}

/// Result of `bench run`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub group_id: String,
    pub baseline: Baseline,
    pub reports: Vec<MetricReport>,
    pub aggregates: Vec<SeedAggregate>,
}

/// Runs `baseline` for each seed (in parallel) and aggregates the reports.
pub fn run_baseline_seeds(
    registry: &Registry,
    data: &GroupData,
    baseline: Baseline,
    seeds: &[u64],
    node2vec: &Node2VecRun,
) -> Result<(RunOutput, Vec<ctxbench_core::PredictionSet>), GroupError> {
    let results: Vec<Result<(MetricReport, ctxbench_core::PredictionSet), GroupError>> = std::thread::scope(|s| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                s.spawn(move || {
                    let preds = data.run_baseline(registry, baseline, seed, node2vec)?;
                    Ok((data.evaluate(seed, &preds)?, preds))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("seed worker panicked")).collect()
    });
    let mut reports = Vec::with_capacity(seeds.len());
    let mut preds = Vec::with_capacity(seeds.len());
    for r in results {
        let (report, p) = r?;
        reports.push(report);
        preds.push(p);
    }
    let refs: Vec<&MetricReport> = reports.iter().collect();
    let aggregates = aggregate_common(&refs);
    Ok((
        RunOutput {
            group_id: data.group.group_id.clone(),
            baseline,
            reports,
            aggregates,
        },
        preds,
    ))
}

/// `metric  mean ± std` rows.
pub fn aggregate_table(aggs: &[SeedAggregate]) -> String {
    let width = aggs.iter().map(|a| a.metric.len()).max().unwrap_or(6).max(6);
    let mut s = format!("{:<width$}  mean ± std (n)\n", "metric");
    for a in aggs {
        s += &format!("{:<width$}  {:.3} ± {:.3} ({})\n", a.metric, a.mean, a.std, a.n_seeds);
    }
    s
}

fn manifest_table(ms: &[DatasetManifest]) -> String {
    let mut s = String::from("name\tversion\trows\tparent\tcontent_hash\n");
    for m in ms {
        let parent = m.parent.as_ref().map(|p| p.to_string()).unwrap_or_else(|| "-".into());
        s += &format!("{}\t{}\t{}\t{}\t{}\n", m.name, m.version, m.rows, parent, &m.content_hash[..12]);
    }
    s
}

fn parse_ref(s: &str) -> Result<DatasetRef, CliError> {
    let (name, version) = s
        .rsplit_once('@')
        .ok_or_else(|| CliError::usage(format!("expected name@version, got {s:?}")))?;
    let version = version
        .parse()
        .map_err(|_| CliError::usage(format!("bad version in {s:?}")))?;
    Ok(DatasetRef::new(name, version))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let file = File::open(path).map_err(|e| CliError::domain(format!("{}: {e}", path.display())))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| CliError::domain(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes).map_err(|e| CliError::domain(format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, value: &impl Serialize) -> Result<(), CliError> {
    writeln!(out, "{}", canonical_json(value))?;
    Ok(())
}

fn prediction_format(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some("jsonl") | Some("json") => Format::Jsonl,
        _ => Format::Csv,
    }
}

/// Parses `args` and runs the command, writing results to `out`. Returns the
/// process exit code; errors go to `err`.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = Config::load(cli.config.as_deref()).map_err(CliError::usage)?;
    if let Some(d) = cli.data_dir {
        cfg.data_dir = d;
    }
    fs::create_dir_all(&cfg.data_dir)
        .map_err(|e| CliError::domain(format!("data dir {}: {e}", cfg.data_dir.display())))?;
    let human = cli.human;
    match cli.command {
        Command::Run(a) => cmd_run(&cfg, a, human, out),
        Command::Evaluate(a) => cmd_evaluate(&cfg, a, out),
        Command::Registry(c) => cmd_registry(&cfg, c, human, out),
        Command::Group(c) => cmd_group(&cfg, c, human, out),
        Command::Split(SplitCommand::Make { group, kind, seed, out: path }) => {
            let registry = Registry::open(&cfg.data_dir)?;
            let mut g = GroupStore::open(&cfg.data_dir)?.get(&group)?;
            if let Some(k) = kind {
                g.split.kind = k.into();
            }
            let spec: SplitSpec = GroupData::load(&registry, &g)?.split(seed)?;
            let body = canonical_json(&spec) + "\n";
            match path {
                Some(p) => write_file(&p, body.as_bytes()),
                None => Ok(out.write_all(body.as_bytes())?),
            }
        }
        Command::Synth(SynthCommand::Planted { name, seed, nodes, contexts }) => {
            let mut pc = PlantedPartitionConfig {
                seed,
                ..Default::default()
            };
            pc.nodes = nodes.unwrap_or(pc.nodes);
            pc.contexts = contexts.unwrap_or(pc.contexts);
            let group = synth_planted(&cfg.data_dir, &name, &pc)?;
            emit(out, &group)
        }
        Command::Leaderboard { group } => {
            GroupStore::open(&cfg.data_dir)?.get(&group)?;
            let board = Leaderboards::open(&cfg.data_dir)?.board(&group)?;
            if human {
                writeln!(out, "rank\tsubmission\tprimary\tseeds")?;
                for (i, e) in board.iter().enumerate() {
                    let p = e.primary_mean.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
                    writeln!(out, "{}\t{}\t{}\t{}", i + 1, e.submission_id, p, e.n_seeds)?;
                }
                Ok(())
            } else {
                emit(out, &board)
            }
        }
        Command::Serve { port, bind } => {
            if let Some(p) = port {
                cfg.port = p;
            }
            if let Some(b) = bind {
                cfg.bind = b;
            }
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(crate::service::serve(&cfg))?;
            Ok(())
        }
    }
}

fn cmd_run(cfg: &Config, a: RunArgs, human: bool, out: &mut dyn Write) -> Result<(), CliError> {
    if a.seeds.is_empty() {
        return Err(CliError::usage("at least one seed is required"));
    }
    let registry = Registry::open(&cfg.data_dir)?;
    let group = GroupStore::open(&cfg.data_dir)?.get(&a.group)?;
    let data = GroupData::load(&registry, &group)?;
    let run: Node2VecRun = match &a.node2vec_config {
        Some(p) => read_json(p)?,
        None => Node2VecRun::default(),
    };
    let (output, preds) = run_baseline_seeds(&registry, &data, a.baseline, &a.seeds, &run)?;
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        for (report, p) in output.reports.iter().zip(&preds) {
            write_file(&dir.join(format!("report_seed{}.json", report.seed)), canonical_json(report).as_bytes())?;
            let mut buf = Vec::new();
            write_predictions(&mut buf, p.rows(), Format::Csv).map_err(CliError::domain)?;
            write_file(&dir.join(format!("predictions_seed{}.csv", report.seed)), &buf)?;
        }
        write_file(&dir.join("aggregate.json"), canonical_json(&output.aggregates).as_bytes())?;
        write_file(&dir.join("aggregate.txt"), aggregate_table(&output.aggregates).as_bytes())?;
    }
    if human {
        write!(out, "{}", aggregate_table(&output.aggregates))?;
        Ok(())
    } else {
        emit(out, &output)
    }
}

fn cmd_evaluate(cfg: &Config, a: EvaluateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let registry = Registry::open(&cfg.data_dir)?;
    let group = GroupStore::open(&cfg.data_dir)?.get(&a.group)?;
    let data = GroupData::load(&registry, &group)?;
    let file = File::open(&a.preds).map_err(|e| CliError::domain(format!("{}: {e}", a.preds.display())))?;
    let preds = parse_predictions(BufReader::new(file), prediction_format(&a.preds), &group.dataset.to_string())
        .map_err(|e| CliError::domain(format!("{}: {e}", a.preds.display())))?;
    let report = data.evaluate(a.seed, &preds)?;
    if let Some(id) = &a.submit {
        Leaderboards::open(&cfg.data_dir)?.record(&group.group_id, id, &group.primary_metric, &report)?;
    }
    emit(out, &report)
}

fn cmd_registry(cfg: &Config, c: RegistryCommand, human: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let registry = Registry::open(&cfg.data_dir)?;
    match c {
        RegistryCommand::Add { name, file, parent, schema } => {
            let bytes = fs::read(&file).map_err(|e| CliError::domain(format!("{}: {e}", file.display())))?;
            let schema: Option<Schema> = schema.as_deref().map(read_json).transpose()?;
            let parent = parent.as_deref().map(parse_ref).transpose()?;
            let m = registry.register_dataset(&name, &bytes, schema.as_ref(), parent)?;
            emit(out, &m)
        }
        RegistryCommand::View { view_file, output, fixtures, cache_dir } => {
            let view: DataViewConfig = read_json(&view_file)?;
            let spec = FetcherSpec {
                kind: match cfg.fetch_mode() {
                    FetchMode::Fixture => FetcherKind::FixtureFile,
                    FetchMode::Live => FetcherKind::RestGetSequence,
                },
                fixture_path: fixtures,
                cache_dir,
                ..FetcherSpec::default()
            };
            let fetcher = build_fetcher(&spec, cfg.fetch_mode(), UreqTransport).map_err(CliError::domain)?;
            let (_, m) = registry.apply_view(&view, &output, fetcher.as_ref())?;
            emit(out, &m)
        }
        RegistryCommand::Lineage { name, version } => {
            let chain = registry.lineage(&name, version)?;
            if human {
                write!(out, "{}", manifest_table(&chain))?;
                Ok(())
            } else {
                emit(out, &chain)
            }
        }
        RegistryCommand::List => {
            let all = registry.list()?;
            if human {
                write!(out, "{}", manifest_table(&all))?;
                Ok(())
            } else {
                emit(out, &all)
            }
        }
        RegistryCommand::Rows { name, version, filter, chunk_size } => {
            let stream = registry.stream_dataset(&name, version, filter.as_deref(), chunk_size, None)?;
            for batch in stream {
                let batch = batch?;
                for row in &batch.rows {
                    let obj: BTreeMap<&str, &str> =
                        batch.columns.iter().map(String::as_str).zip(row.iter().map(String::as_str)).collect();
                    emit(out, &obj)?;
                }
            }
            Ok(())
        }
    }
}

fn cmd_group(cfg: &Config, c: GroupCommand, human: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let store = GroupStore::open(&cfg.data_dir)?;
    match c {
        GroupCommand::Add { file, replace } => {
            let registry = Registry::open(&cfg.data_dir)?;
            let group: BenchmarkGroup = read_json(&file)?;
            let g = store.add(&registry, group, replace).map_err(|e| match e {
                GroupError::Invalid(_) => CliError::usage(e),
                other => other.into(),
            })?;
            emit(out, &g)
        }
        GroupCommand::List => {
            let all = store.list()?;
            if human {
                writeln!(out, "group\tdataset\tfamily\tsplit\tprimary")?;
                for g in &all {
                    writeln!(
                        out,
                        "{}\t{}\t{:?}\t{:?}\t{}",
                        g.group_id, g.dataset, g.family, g.split.kind, g.primary_metric
                    )?;
                }
                Ok(())
            } else {
                emit(out, &all)
            }
        }
        GroupCommand::Show { group } => emit(out, &store.get(&group)?),
    }
}

/// Registers a planted-partition benchmark: samples, edge list, membership
/// and a cold-split group, all under `name`.
pub fn synth_planted(data_dir: &Path, name: &str, pc: &PlantedPartitionConfig) -> Result<BenchmarkGroup, CliError> {
    let pp = planted_partition(pc);
    let registry = Registry::open(data_dir)?;
    let mut samples = Table::new(vec!["entity".into(), "context".into(), "label".into()]);
    samples.rows = pp
        .samples
        .iter()
        .map(|s| vec![s.entity.to_string(), s.context.to_string(), u8::from(s.label).to_string()])
        .collect();
    let (edges, members) = graph_tables(&pp.graph);
    let ds = registry.register_dataset(name, &samples.to_csv(), None, None)?;
    let e = registry.register_dataset(&format!("{name}-edges"), &edges.to_csv(), None, None)?;
    let m = registry.register_dataset(&format!("{name}-members"), &members.to_csv(), None, None)?;
    let k = pc.contexts.max(1) as u32;
    let group = BenchmarkGroup {
        group_id: name.to_string(),
        dataset: ds.reference(),
        family: TaskFamily::Context,
        split: SplitParams {
            cold_key: Some(ColdKey::Entity),
            fractions: Fractions::default(),
            ..SplitParams::cold()
        },
        metrics: MetricSuite {
            ranks: vec![5, 20],
            top_k: vec![1, k],
            threshold: 0.5,
        },
        primary_metric: format!("ap@5_top{k}"),
        graph: Some(GraphSource {
            edges: e.reference(),
            membership: m.reference(),
        }),
    };
    Ok(GroupStore::open(data_dir)?.add(&registry, group, true)?)
}
