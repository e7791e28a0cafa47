use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use searchnet::evolution::{run_evolution, EvolutionConfig, EvolutionTrace, StepReport};
use searchnet::harness::{
    self, figure_spec, run_experiment_with, synthetic_seed_graph, EngineMode, ExperimentSpec, Figure,
    RunArtifacts, RunOptions,
};
use searchnet::ingest::{self, BipartizeStrategy, LoadOptions, Provenance};
use searchnet::metrics::{degree_histogram, diameter_bounded, fit_power_law, FitMethod};
use searchnet::sir::{run_sir, SirConfig};
use searchnet::{BipartiteGraph, Side};

#[derive(Parser)]
#[command(name = "searchnet", version, about = "Evolving search-network simulations")]
struct Cli {
    /// Worker threads for replicate fan-out.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert an edge list into a bipartite seed graph.
    Ingest(IngestArgs),
    /// Grow a graph and write the result.
    Evolve(EvolveArgs),
    /// Degree histogram, power-law fits and diameter of a graph file.
    Metrics(MetricsArgs),
    /// Rumor spreading on a graph file.
    Sir(SirArgs),
    /// Regenerate the data behind one figure.
    Reproduce(ReproduceArgs),
    /// Check a graph file against the model invariants.
    Validate(ValidateArgs),
    /// Run an experiment spec, or re-run a manifest.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    On,
    Off,
    Paired,
}

impl From<Engine> for EngineMode {
    fn from(e: Engine) -> Self {
        match e {
            Engine::On => EngineMode::On,
            Engine::Off => EngineMode::Off,
            Engine::Paired => EngineMode::Paired,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    User,
    Topic,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::User => Side::User,
            SideArg::Topic => Side::Topic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    DirectBipartite,
    DoubleCover,
    RandomSplit,
}

#[derive(Args)]
struct IngestArgs {
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    directed: bool,
    #[arg(long, value_enum, default_value = "double-cover")]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 0.5)]
    split_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    c_u: usize,
    #[arg(long, default_value_t = 2)]
    c_t: usize,
}

#[derive(Args)]
struct EvolveArgs {
    /// Evolution config as JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from this graph file instead of a synthetic seed.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    seed_users: usize,
    #[arg(long, default_value_t = 10)]
    seed_topics: usize,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "on")]
    engine: Engine,
    /// Also write every step report as JSON lines.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    graph: PathBuf,
    #[arg(long, value_enum, default_value = "user")]
    side: SideArg,
    #[arg(long, default_value_t = 11)]
    d_min: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SirArgs {
    graph: PathBuf,
    /// Rumor config as JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "paired")]
    engine: Engine,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, value_enum)]
    engine: Option<Engine>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, spec: &mut ExperimentSpec) {
        if let Some(s) = self.seed {
            spec.evolution.seed = s;
        }
        if let Some(r) = self.replicates {
            spec.replicates = r;
        }
        if let Some(e) = self.engine {
            spec.engine = e.into();
        }
        if let Some(o) = &self.out {
            spec.output_dir = o.clone();
        }
    }
}

#[derive(Args)]
struct ReproduceArgs {
    /// fig2, fig3, fig4 or fig5.
    figure: String,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct ValidateArgs {
    graph: PathBuf,
    #[arg(long, default_value_t = 1)]
    c_u: usize,
    #[arg(long, default_value_t = 1)]
    c_t: usize,
    /// Also require a connected graph.
    #[arg(long)]
    connected: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment spec (JSON).
    #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
    config: Option<PathBuf>,
    /// Manifest of an earlier run to repeat.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

/// Counts warnings; any diagnostic makes the exit status nonzero.
#[derive(Default)]
struct Diagnostics {
    count: usize,
}

impl Diagnostics {
    fn warn(&mut self, message: impl std::fmt::Display) {
        eprintln!("warning: {message}");
        self.count += 1;
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut diag = Diagnostics::default();
    let options = RunOptions { threads: cli.threads };
    let result = match cli.command {
        Command::Ingest(a) => ingest_cmd(a),
        Command::Evolve(a) => evolve_cmd(a),
        Command::Metrics(a) => metrics_cmd(a, &mut diag),
        Command::Sir(a) => sir_cmd(a),
        Command::Reproduce(a) => reproduce_cmd(a, &options),
        Command::Validate(a) => validate_cmd(a, &mut diag),
        Command::Run(a) => run_cmd(a, &options),
    };
    match result {
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
        Ok(()) if diag.count > 0 => ExitCode::FAILURE,
        Ok(()) => ExitCode::SUCCESS,
    }
}

fn print(value: serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(&value).expect("json"));
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn read_graph(path: &Path) -> Result<BipartiteGraph> {
    let file = fs::File::open(path).with_context(|| format!("cannot open graph {}", path.display()))?;
    Ok(ingest::read_graph(BufReader::new(file), &path.display().to_string())?)
}

fn write_graph(graph: &BipartiteGraph, path: &Path) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    let mut out = BufWriter::new(file);
    ingest::write_graph(graph, &mut out)?;
    out.flush()?;
    Ok(())
}

fn ingest_cmd(a: IngestArgs) -> Result<()> {
    let file = fs::File::open(&a.input).with_context(|| format!("cannot open {}", a.input.display()))?;
    let raw = ingest::load_edge_list(
        BufReader::new(file),
        &a.input.display().to_string(),
        LoadOptions { directed: a.directed },
    )?;
    let strategy = match a.strategy {
        StrategyArg::DirectBipartite => BipartizeStrategy::DirectBipartite,
        StrategyArg::DoubleCover => BipartizeStrategy::DoubleCover,
        StrategyArg::RandomSplit => BipartizeStrategy::RandomSplit { split_fraction: a.split_fraction, seed: a.seed },
    };
    let seeded = ingest::seed_from_dataset(&raw, &strategy, a.c_u, a.c_t, a.seed)?;
    let provenance = Provenance::new(&raw, &strategy, a.seed, &seeded);
    create_dir(&a.out)?;
    write_graph(&seeded.bipartized.graph, &a.out.join("seed_graph.txt"))?;
    fs::write(a.out.join("provenance.json"), serde_json::to_string_pretty(&provenance)?)?;
    print(serde_json::to_value(&provenance)?);
    Ok(())
}

fn evolve_cmd(a: EvolveArgs) -> Result<()> {
    let mut config: EvolutionConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => EvolutionConfig::default(),
    };
    if let Some(s) = a.steps {
        config.steps = s;
    }
    if let Some(s) = a.seed {
        config.seed = s;
    }
    match a.engine {
        Engine::On => {}
        Engine::Off => config = config.without_engine(),
        Engine::Paired => bail!("evolve runs one mode at a time; use --engine on or off"),
    }
    config.validate()?;
    let mut graph = match &a.graph {
        Some(p) => read_graph(p)?,
        None => synthetic_seed_graph(a.seed_users, a.seed_topics, true, &config, config.seed)?,
    };
    let mut trace = EvolutionTrace::default();
    let mut record = |_: &BipartiteGraph, r: &StepReport| {
        if a.trace {
            trace.reports.push(r.clone());
        }
        Ok::<(), String>(())
    };
    run_evolution(&mut graph, &config, &mut [&mut record])?;
    create_dir(&a.out)?;
    write_graph(&graph, &a.out.join("graph.txt"))?;
    if a.trace {
        let file = fs::File::create(a.out.join("trace.jsonl"))?;
        trace.write_jsonl(BufWriter::new(file))?;
    }
    fs::write(a.out.join("config.json"), serde_json::to_string_pretty(&config)?)?;
    print(json!({
        "users": graph.num_users(),
        "topics": graph.num_topics(),
        "edges": graph.edge_count(),
        "steps": config.steps,
        "seed": config.seed,
    }));
    Ok(())
}

fn fit_json(fit: &searchnet::metrics::PowerLawFit) -> serde_json::Value {
    json!({
        "alpha": fit.alpha,
        "magnitude": fit.magnitude(),
        "sign": if fit.alpha < 0.0 { "negative" } else { "non-negative" },
        "d_min": fit.d_min,
        "quality": fit.quality,
        "n_tail": fit.n_tail,
    })
}

fn metrics_cmd(a: MetricsArgs, diag: &mut Diagnostics) -> Result<()> {
    let graph = read_graph(&a.graph)?;
    let side: Side = a.side.into();
    let hist = degree_histogram(&graph, side, 1);
    let mut fits = serde_json::Map::new();
    for (name, method) in [("log_log_regression", FitMethod::LogLogRegression), ("discrete_mle", FitMethod::DiscreteMle)] {
        match fit_power_law(&hist, a.d_min, method) {
            Ok(f) => {
                fits.insert(name.into(), fit_json(&f));
            }
            Err(e) => diag.warn(format!("{name} fit skipped: {e}")),
        }
    }
    let diameter = diameter_bounded(&graph);
    let components = graph.components();
    if let Some(out) = &a.out {
        create_dir(out)?;
        let name = match side {
            Side::User => "degree_user.csv",
            Side::Topic => "degree_topic.csv",
        };
        let file = fs::File::create(out.join(name))?;
        hist.write_csv(BufWriter::new(file))?;
    }
    print(json!({
        "users": graph.num_users(),
        "topics": graph.num_topics(),
        "edges": graph.edge_count(),
        "components": components.len(),
        "diameter": { "value": diameter.lower, "component_size": diameter.component_size, "method": diameter.method },
        "fits": fits,
    }));
    Ok(())
}

fn sir_cmd(a: SirArgs) -> Result<()> {
    let graph = read_graph(&a.graph)?;
    let mut config: SirConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => SirConfig::default(),
    };
    if let Some(s) = a.seed {
        config.seed = s;
    }
    config.validate()?;
    let modes: &[(&str, bool)] = match a.engine {
        Engine::On => &[("on", true)],
        Engine::Off => &[("off", false)],
        Engine::Paired => &[("on", true), ("off", false)],
    };
    create_dir(&a.out)?;
    let mut summary = serde_json::Map::new();
    for &(name, enabled) in modes {
        let cfg = SirConfig { engine_enabled: enabled, ..config.clone() };
        let trace = run_sir(&graph, &cfg)?;
        let file = fs::File::create(a.out.join(format!("sir_{name}.csv")))?;
        trace.write_csv(BufWriter::new(file), cfg.max_steps)?;
        summary.insert(
            name.into(),
            json!({
                "terminal_coverage": trace.coverage_at(cfg.max_steps),
                "steps_to_90": trace.first_reaching(0.9),
                "steps_to_stability": trace.steps_to_stability,
            }),
        );
    }
    print(serde_json::Value::Object(summary));
    Ok(())
}

fn report(art: &RunArtifacts) {
    print(json!({
        "output_dir": art.output_dir,
        "aggregate": art.aggregate_csv,
        "replicate_files": art.replicate_csvs.len(),
        "manifest": art.manifest_path,
    }));
}

fn reproduce_cmd(a: ReproduceArgs, options: &RunOptions) -> Result<()> {
    let figure: Figure = a.figure.parse()?;
    let mut spec = figure_spec(figure, PathBuf::from(&a.figure));
    a.overrides.apply(&mut spec);
    report(&run_experiment_with(&spec, options)?);
    Ok(())
}

fn run_cmd(a: RunArgs, options: &RunOptions) -> Result<()> {
    let art = match (&a.config, &a.manifest) {
        (Some(path), _) => {
            let mut spec = ExperimentSpec::load(path)?;
            a.overrides.apply(&mut spec);
            run_experiment_with(&spec, options)?
        }
        (None, Some(manifest)) => {
            let mut spec = harness::load_manifest_spec(manifest)?;
            a.overrides.apply(&mut spec);
            run_experiment_with(&spec, options)?
        }
        (None, None) => unreachable!("clap requires one of them"),
    };
    report(&art);
    Ok(())
}

fn validate_cmd(a: ValidateArgs, diag: &mut Diagnostics) -> Result<()> {
    let graph = read_graph(&a.graph)?;
    if let Err(e) = graph.check_invariants() {
        diag.warn(format!("invariant violated: {e}"));
    }
    for (side, min) in [(Side::User, a.c_u), (Side::Topic, a.c_t)] {
        if let Some(d) = graph.min_degree(side).filter(|&d| d < min) {
            diag.warn(format!("{side:?} side has minimum degree {d}, below {min}"));
        }
    }
    let connected = graph.is_connected();
    if a.connected && !connected {
        diag.warn("graph is not connected");
    }
    print(json!({
        "users": graph.num_users(),
        "topics": graph.num_topics(),
        "edges": graph.edge_count(),
        "connected": connected,
        "diagnostics": diag.count,
    }));
    Ok(())
}
