//! Batch experiments: seeded replicates, engine on/off pairing, CSV output.
//!
//! An [`ExperimentSpec`] is a JSON document. [`run_experiment`] writes one
//! CSV per replicate and mode under `replicates/`, an aggregated CSV, and a
//! `manifest.json` holding the fully resolved spec. Re-running that spec
//! reproduces every CSV byte for byte; only the wall time in the manifest
//! differs.
//!
//! CSV schemas:
//!
//! | file | columns |
//! |------|---------|
//! | `degree.csv` | `d,count,ln_d,ln_count,mode,count_std` |
//! | `diameter.csv` | `t,mean,stddev,mode` |
//! | `coverage.csv` | `t,coverage_mean,coverage_std,mode` |
//!
//! `count` in `degree.csv` is the mean count over replicates, with missing
//! degrees counted as zero. Degree rows start at `degree_floor` and skip empty
//! bins, so both log columns are always finite. Standard deviations use the `n - 1` denominator
//! and are 0 for a single replicate.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{run_evolution, EvolutionConfig, StepReport};
use crate::graph::{new_seed_graph, BipartiteGraph, Side};
use crate::ingest::{load_edge_list, seed_from_dataset, BipartizeStrategy, LoadOptions, Provenance};
use crate::metrics::{
    degree_histogram, diameter_bounded, expected_route, fit_power_law, no_engine_exponent, theoretical_degree_fraction,
    worst_case_diameter, FitMethod, PowerLawFit,
};
use crate::rng;
use crate::sir::{run_sir, SirConfig};

pub const SCHEMA_VERSION: u32 = 1;

const SEED_GRAPH_KEY: u64 = 0x5345_4544;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DegreeDistribution,
    DiameterTrace,
    RumorCoverage,
    TheoryTables,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedSource {
    /// `new_seed_graph` with the evolution config's `c_u`, `c_t`.
    Synthetic { users: usize, topics: usize, connected: bool },
    /// An edge-list file. When `step_fraction` is set, the run length is
    /// that fraction of the seed graph's node count.
    Dataset {
        path: PathBuf,
        #[serde(default)]
        strategy: BipartizeStrategy,
        #[serde(default)]
        directed: bool,
        #[serde(default)]
        step_fraction: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineMode {
    On,
    Off,
    Paired,
}

impl EngineMode {
    fn modes(self) -> &'static [Mode] {
        match self {
            EngineMode::On => &[Mode::On],
            EngineMode::Off => &[Mode::Off],
            EngineMode::Paired => &[Mode::On, Mode::Off],
        }
    }
}

/// One side of a paired comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    On,
    Off,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::On => "on",
            Mode::Off => "off",
        }
    }
}

fn default_degree_floor() -> usize {
    11
}

fn default_fit_d_min() -> usize {
    11
}

fn default_side() -> Side {
    Side::User
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    pub seed_graph: SeedSource,
    pub evolution: EvolutionConfig,
    /// Required for rumor experiments.
    #[serde(default)]
    pub sir: Option<SirConfig>,
    pub replicates: usize,
    pub record_interval: u64,
    pub engine: EngineMode,
    pub output_dir: PathBuf,
    /// Degrees below this get empty log columns.
    #[serde(default = "default_degree_floor")]
    pub degree_floor: usize,
    #[serde(default = "default_fit_d_min")]
    pub fit_d_min: usize,
    #[serde(default = "default_side")]
    pub degree_side: Side,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, seed_graph: SeedSource, evolution: EvolutionConfig, output_dir: PathBuf) -> Self {
        ExperimentSpec {
            schema_version: SCHEMA_VERSION,
            kind,
            seed_graph,
            evolution,
            sir: (kind == ExperimentKind::RumorCoverage).then(SirConfig::default),
            replicates: 1,
            record_interval: 1,
            engine: EngineMode::Paired,
            output_dir,
            degree_floor: default_degree_floor(),
            fit_d_min: default_fit_d_min(),
            degree_side: default_side(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display(), e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Spec(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.replicates == 0 {
            return Err(Error::Spec("replicates must be at least 1".into()));
        }
        if self.record_interval == 0 {
            return Err(Error::Spec("record_interval must be at least 1".into()));
        }
        if self.fit_d_min == 0 {
            return Err(Error::Spec("fit_d_min must be at least 1".into()));
        }
        self.evolution.validate().map_err(|e| Error::Spec(e.to_string()))?;
        match (&self.sir, self.kind) {
            (None, ExperimentKind::RumorCoverage) => {
                return Err(Error::Spec("rumor experiments need a sir section".into()))
            }
            (Some(s), _) => s.validate().map_err(|e| Error::Spec(e.to_string()))?,
            _ => {}
        }
        match &self.seed_graph {
            SeedSource::Synthetic { users, topics, .. } if *users == 0 || *topics == 0 => {
                Err(Error::Spec("synthetic seed graph needs users and topics".into()))
            }
            SeedSource::Dataset { step_fraction: Some(f), .. } if !(*f >= 0.0 && f.is_finite()) => {
                Err(Error::Spec(format!("step_fraction must be non-negative, got {f}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

/// One aggregated row: `x` is the degree or the time step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub mode: Mode,
    pub x: u64,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateFit {
    pub mode: Mode,
    pub replicate: usize,
    pub regression: Option<PowerLawFit>,
    pub mle: Option<PowerLawFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RumorOutcome {
    pub mode: Mode,
    pub replicate: usize,
    pub terminal_coverage: f64,
    pub steps_to_90: Option<u64>,
    pub steps_to_stability: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub code_version: String,
    pub spec: ExperimentSpec,
    pub replicate_seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub wall_time_secs: f64,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub output_dir: PathBuf,
    pub replicate_csvs: Vec<PathBuf>,
    pub aggregate_csv: PathBuf,
    pub extra_files: Vec<PathBuf>,
    pub manifest_path: PathBuf,
    pub spec: ExperimentSpec,
    pub series: Vec<SeriesPoint>,
    pub fits: Vec<ReplicateFit>,
    pub rumor: Vec<RumorOutcome>,
}

impl RunArtifacts {
    pub fn series_for(&self, mode: Mode) -> impl Iterator<Item = &SeriesPoint> + '_ {
        self.series.iter().filter(move |p| p.mode == mode)
    }
}

/// Everything a replicate needs to build its starting graph.
enum Seed {
    Synthetic { users: usize, topics: usize, connected: bool },
    Dataset(Box<BipartiteGraph>),
}

impl Seed {
    fn graph(&self, config: &EvolutionConfig, replicate_seed: u64) -> Result<BipartiteGraph> {
        match self {
            Seed::Synthetic { users, topics, connected } => {
                synthetic_seed_graph(*users, *topics, *connected, config, replicate_seed)
            }
            Seed::Dataset(g) => Ok((**g).clone()),
        }
    }
}

/// The synthetic seed graph a replicate with seed `seed` starts from.
pub fn synthetic_seed_graph(
    users: usize,
    topics: usize,
    connected: bool,
    config: &EvolutionConfig,
    seed: u64,
) -> Result<BipartiteGraph> {
    let mut r = rng::stream(seed, &[SEED_GRAPH_KEY]);
    new_seed_graph(users, topics, config.c_u, config.c_t, connected, &mut r)
}

/// Load and bipartize a dataset seed, resolving `step_fraction` into the
/// evolution step count.
fn prepare_seed(spec: &mut ExperimentSpec) -> Result<(Seed, Option<Provenance>)> {
    match &mut spec.seed_graph {
        SeedSource::Synthetic { users, topics, connected } => Ok((
            Seed::Synthetic { users: *users, topics: *topics, connected: *connected },
            None,
        )),
        SeedSource::Dataset { path, strategy, directed, step_fraction } => {
            let file = fs::File::open(&*path).map_err(|e| Error::io(path.display(), e))?;
            let raw = load_edge_list(
                BufReader::new(file),
                &path.display().to_string(),
                LoadOptions { directed: *directed },
            )?;
            let seed = spec.evolution.seed;
            let seeded = seed_from_dataset(&raw, strategy, spec.evolution.c_u, spec.evolution.c_t, seed)?;
            let provenance = Provenance::new(&raw, strategy, seed, &seeded);
            if let Some(f) = step_fraction.take() {
                spec.evolution.steps = (f * (seeded.bipartized.graph.num_users() + seeded.bipartized.graph.num_topics()) as f64).round() as u64;
            }
            Ok((Seed::Dataset(Box::new(seeded.bipartized.graph)), provenance.into()))
        }
    }
}

fn mode_config(config: &EvolutionConfig, mode: Mode, replicate_seed: u64) -> EvolutionConfig {
    let base = EvolutionConfig { seed: replicate_seed, ..config.clone() };
    match mode {
        Mode::On => base,
        Mode::Off => base.without_engine(),
    }
}

/// Result of one (replicate, mode) job before it is written out.
enum JobOutput {
    Degree { counts: BTreeMap<usize, usize>, fit: ReplicateFit },
    Diameter { trace: Vec<(u64, usize)> },
    Rumor { coverage: Vec<f64>, csv: String, outcome: RumorOutcome },
}

struct Job {
    replicate: usize,
    mode: Mode,
    seed: u64,
}

fn run_job(spec: &ExperimentSpec, seed_graph: &Seed, job: &Job) -> Result<JobOutput> {
    let replicate_seed = job.seed;
    let mut graph = seed_graph.graph(&spec.evolution, replicate_seed)?;
    match spec.kind {
        ExperimentKind::DegreeDistribution => {
            let config = mode_config(&spec.evolution, job.mode, replicate_seed);
            run_evolution(&mut graph, &config, &mut [])?;
            let hist = degree_histogram(&graph, spec.degree_side, 1);
            let fit = ReplicateFit {
                mode: job.mode,
                replicate: job.replicate,
                regression: fit_power_law(&hist, spec.fit_d_min, FitMethod::LogLogRegression).ok(),
                mle: fit_power_law(&hist, spec.fit_d_min, FitMethod::DiscreteMle).ok(),
            };
            Ok(JobOutput::Degree { counts: hist.counts, fit })
        }
        ExperimentKind::DiameterTrace => {
            let config = mode_config(&spec.evolution, job.mode, replicate_seed);
            let mut trace = vec![(0, diameter_bounded(&graph).lower)];
            let interval = spec.record_interval;
            let mut record = |g: &BipartiteGraph, report: &StepReport| {
                if report.time % interval == 0 || report.time == config.steps {
                    trace.push((report.time, diameter_bounded(g).lower));
                }
                Ok::<(), String>(())
            };
            run_evolution(&mut graph, &config, &mut [&mut record])?;
            Ok(JobOutput::Diameter { trace })
        }
        ExperimentKind::RumorCoverage => {
            // the graph is grown once with the configured engine; only the
            // rumor's search channel follows the mode
            let config = EvolutionConfig { seed: replicate_seed, ..spec.evolution.clone() };
            run_evolution(&mut graph, &config, &mut [])?;
            let base = spec.sir.clone().expect("validated");
            let sir = SirConfig {
                seed: replicate_seed,
                engine_enabled: job.mode == Mode::On,
                ..base
            };
            let trace = run_sir(&graph, &sir)?;
            let mut csv = Vec::new();
            trace.write_csv(&mut csv, sir.max_steps).expect("in-memory write");
            let coverage = (0..=sir.max_steps).map(|t| trace.coverage_at(t)).collect();
            let outcome = RumorOutcome {
                mode: job.mode,
                replicate: job.replicate,
                terminal_coverage: trace.coverage_at(sir.max_steps),
                steps_to_90: trace.first_reaching(0.9),
                steps_to_stability: trace.steps_to_stability,
            };
            Ok(JobOutput::Rumor {
                coverage,
                csv: String::from_utf8(csv).expect("ascii"),
                outcome,
            })
        }
        ExperimentKind::TheoryTables => unreachable!("theory tables run no replicates"),
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir.join("replicates")).map_err(|e| Error::io(dir.display(), e))?;
        Ok(Writer { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(path.display(), e))?;
        self.files.push(PathBuf::from(name));
        Ok(path)
    }
}

fn replicate_name(stem: &str, mode: Mode, replicate: usize) -> String {
    format!("replicates/{stem}_{}_{replicate:03}.csv", mode.as_str())
}

fn ln_cells(d: usize, count: f64) -> (f64, f64) {
    ((d as f64).ln(), count.ln())
}

#[derive(Default)]
struct Collected {
    replicate_csvs: Vec<PathBuf>,
    extra: Vec<PathBuf>,
    series: Vec<SeriesPoint>,
    fits: Vec<ReplicateFit>,
    rumor: Vec<RumorOutcome>,
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunArtifacts> {
    run_experiment_with(spec, &RunOptions::default())
}

pub fn run_experiment_with(spec: &ExperimentSpec, options: &RunOptions) -> Result<RunArtifacts> {
    let started = Instant::now();
    spec.validate()?;
    let mut spec = spec.clone();
    let mut writer = Writer::new(&spec.output_dir)?;
    let mut out = Collected::default();

    let (aggregate, seeds, provenance) = if spec.kind == ExperimentKind::TheoryTables {
        (write_theory(&spec, &mut writer, &mut out)?, Vec::new(), None)
    } else {
        let (seed_graph, provenance) = prepare_seed(&mut spec)?;
        let seeds: Vec<u64> = (0..spec.replicates)
            .map(|r| rng::replicate_seed(spec.evolution.seed, r as u64))
            .collect();
        let jobs: Vec<Job> = seeds
            .iter()
            .enumerate()
            .flat_map(|(replicate, &seed)| spec.engine.modes().iter().map(move |&mode| Job { replicate, mode, seed }))
            .collect();
        let run_all = || jobs.par_iter().map(|job| run_job(&spec, &seed_graph, job)).collect::<Result<Vec<_>>>();
        let outputs = match options.threads {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Spec(format!("cannot start {n} worker threads: {e}")))?
                .install(run_all)?,
            None => run_all()?,
        };
        let aggregate = match spec.kind {
            ExperimentKind::DegreeDistribution => write_degree(&spec, &jobs, outputs, &mut writer, &mut out)?,
            ExperimentKind::DiameterTrace => write_diameter(&spec, &jobs, outputs, &mut writer, &mut out)?,
            ExperimentKind::RumorCoverage => write_rumor(&spec, &jobs, outputs, &mut writer, &mut out)?,
            ExperimentKind::TheoryTables => unreachable!(),
        };
        (aggregate, seeds, provenance)
    };

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        spec: spec.clone(),
        replicate_seeds: seeds,
        provenance,
        wall_time_secs: started.elapsed().as_secs_f64(),
        files: writer.files.clone(),
    };
    let manifest_path = writer.write("manifest.json", &serde_json::to_string_pretty(&manifest)?)?;
    Ok(RunArtifacts {
        output_dir: spec.output_dir.clone(),
        replicate_csvs: out.replicate_csvs,
        aggregate_csv: aggregate,
        extra_files: out.extra,
        manifest_path,
        spec,
        series: out.series,
        fits: out.fits,
        rumor: out.rumor,
    })
}

/// The resolved spec stored in a manifest file.
pub fn load_manifest_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display(), e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Spec(e.to_string()))?;
    let spec = value
        .get("spec")
        .ok_or_else(|| Error::Spec(format!("{} has no spec field", path.display())))?;
    serde_json::from_value(spec.clone()).map_err(|e| Error::Spec(e.to_string()))
}

/// Re-run the experiment recorded in `manifest`, writing to `output_dir`.
pub fn rerun_manifest(manifest: &Path, output_dir: &Path, options: &RunOptions) -> Result<RunArtifacts> {
    let spec = ExperimentSpec {
        output_dir: output_dir.to_path_buf(),
        ..load_manifest_spec(manifest)?
    };
    run_experiment_with(&spec, options)
}

fn write_degree(
    spec: &ExperimentSpec,
    jobs: &[Job],
    outputs: Vec<JobOutput>,
    writer: &mut Writer,
    out: &mut Collected,
) -> Result<PathBuf> {
    let floor = spec.degree_floor;
    let mut per_mode: BTreeMap<Mode, Vec<BTreeMap<usize, usize>>> = BTreeMap::new();
    for (job, output) in jobs.iter().zip(outputs) {
        let JobOutput::Degree { counts, fit } = output else { unreachable!() };
        let mut csv = String::from("d,count,ln_d,ln_count,mode\n");
        for (&d, &c) in counts.range(floor..).filter(|(_, &c)| c > 0) {
            let (ld, lc) = ln_cells(d, c as f64);
            writeln!(csv, "{d},{c},{ld},{lc},{}", job.mode.as_str()).unwrap();
        }
        out.replicate_csvs.push(writer.write(&replicate_name("degree", job.mode, job.replicate), &csv)?);
        per_mode.entry(job.mode).or_default().push(counts);
        out.fits.push(fit);
    }
    let mut csv = String::from("d,count,ln_d,ln_count,mode,count_std\n");
    for mode in spec.engine.modes() {
        let reps = &per_mode[mode];
        let degrees: BTreeSet<usize> = reps
            .iter()
            .flat_map(|m| m.range(floor..).filter(|(_, &c)| c > 0).map(|(&d, _)| d))
            .collect();
        for d in degrees {
            let values: Vec<f64> = reps.iter().map(|m| *m.get(&d).unwrap_or(&0) as f64).collect();
            let (mean, std) = mean_std(&values);
            let (ld, lc) = ln_cells(d, mean);
            writeln!(csv, "{d},{mean},{ld},{lc},{},{std}", mode.as_str()).unwrap();
            out.series.push(SeriesPoint { mode: *mode, x: d as u64, mean, std });
        }
    }
    out.extra.push(writer.write("fits.json", &fit_summary(spec, &out.fits)?)?);
    writer.write("degree.csv", &csv)
}

#[derive(Serialize)]
struct FitSummary<'a> {
    side: Side,
    d_min: usize,
    theory_alpha_without_engine: f64,
    mean_mle_alpha: BTreeMap<&'static str, f64>,
    mean_regression_alpha: BTreeMap<&'static str, f64>,
    replicates: &'a [ReplicateFit],
}

fn fit_summary(spec: &ExperimentSpec, fits: &[ReplicateFit]) -> Result<String> {
    let mean_of = |pick: &dyn Fn(&ReplicateFit) -> Option<f64>| {
        let mut means = BTreeMap::new();
        for mode in spec.engine.modes() {
            let v: Vec<f64> = fits.iter().filter(|f| f.mode == *mode).filter_map(pick).collect();
            if !v.is_empty() {
                means.insert(mode.as_str(), v.iter().sum::<f64>() / v.len() as f64);
            }
        }
        means
    };
    let e = &spec.evolution;
    let (a, b) = match spec.degree_side {
        Side::User => (e.c_u, e.c_t),
        Side::Topic => (e.c_t, e.c_u),
    };
    let beta = match spec.degree_side {
        Side::User => e.beta,
        Side::Topic => 1.0 - e.beta,
    };
    let summary = FitSummary {
        side: spec.degree_side,
        d_min: spec.fit_d_min,
        theory_alpha_without_engine: no_engine_exponent(a, b, beta),
        mean_mle_alpha: mean_of(&|f| f.mle.as_ref().map(|x| x.alpha)),
        mean_regression_alpha: mean_of(&|f| f.regression.as_ref().map(|x| x.alpha)),
        replicates: fits,
    };
    Ok(serde_json::to_string_pretty(&summary)?)
}

fn write_diameter(
    spec: &ExperimentSpec,
    jobs: &[Job],
    outputs: Vec<JobOutput>,
    writer: &mut Writer,
    out: &mut Collected,
) -> Result<PathBuf> {
    let mut per_mode: BTreeMap<Mode, Vec<Vec<(u64, usize)>>> = BTreeMap::new();
    for (job, output) in jobs.iter().zip(outputs) {
        let JobOutput::Diameter { trace } = output else { unreachable!() };
        let mut csv = String::from("t,diameter,mode\n");
        for &(t, d) in &trace {
            writeln!(csv, "{t},{d},{}", job.mode.as_str()).unwrap();
        }
        out.replicate_csvs.push(writer.write(&replicate_name("diameter", job.mode, job.replicate), &csv)?);
        per_mode.entry(job.mode).or_default().push(trace);
    }
    let mut csv = String::from("t,mean,stddev,mode\n");
    for mode in spec.engine.modes() {
        let reps = &per_mode[mode];
        for (i, &(t, _)) in reps[0].iter().enumerate() {
            let values: Vec<f64> = reps.iter().map(|r| r[i].1 as f64).collect();
            let (mean, std) = mean_std(&values);
            writeln!(csv, "{t},{mean},{std},{}", mode.as_str()).unwrap();
            out.series.push(SeriesPoint { mode: *mode, x: t, mean, std });
        }
    }
    writer.write("diameter.csv", &csv)
}

fn write_rumor(
    spec: &ExperimentSpec,
    jobs: &[Job],
    outputs: Vec<JobOutput>,
    writer: &mut Writer,
    out: &mut Collected,
) -> Result<PathBuf> {
    let mut per_mode: BTreeMap<Mode, Vec<Vec<f64>>> = BTreeMap::new();
    for (job, output) in jobs.iter().zip(outputs) {
        let JobOutput::Rumor { coverage, csv, outcome } = output else { unreachable!() };
        out.replicate_csvs.push(writer.write(&replicate_name("sir", job.mode, job.replicate), &csv)?);
        per_mode.entry(job.mode).or_default().push(coverage);
        out.rumor.push(outcome);
    }
    let mut csv = String::from("t,coverage_mean,coverage_std,mode\n");
    for mode in spec.engine.modes() {
        let reps = &per_mode[mode];
        for t in 0..reps[0].len() {
            let values: Vec<f64> = reps.iter().map(|r| r[t]).collect();
            let (mean, std) = mean_std(&values);
            writeln!(csv, "{t},{mean},{std},{}", mode.as_str()).unwrap();
            out.series.push(SeriesPoint { mode: *mode, x: t as u64, mean, std });
        }
    }
    out.extra.push(writer.write("rumor.json", &serde_json::to_string_pretty(&out.rumor)?)?);
    writer.write("coverage.csv", &csv)
}

/// Theory curves: `theory_degree.csv` (i,fraction,mode) for the user-degree
/// law with and without the engine, and `theory_route.json` with route
/// expectations and worst-case diameters.
fn write_theory(spec: &ExperimentSpec, writer: &mut Writer, out: &mut Collected) -> Result<PathBuf> {
    let e = &spec.evolution;
    let mut csv = String::from("i,fraction,mode\n");
    for &mode in &[Mode::On, Mode::Off] {
        let config = mode_config(e, mode, e.seed);
        for i in (e.c_u + 1)..=1000 {
            let f = theoretical_degree_fraction(i, &config, 1.0)?;
            writeln!(csv, "{i},{f},{}", mode.as_str()).unwrap();
            out.series.push(SeriesPoint { mode, x: i as u64, mean: f, std: 0.0 });
        }
    }
    let topics = match &spec.seed_graph {
        SeedSource::Synthetic { topics, .. } => *topics as u64,
        SeedSource::Dataset { .. } => 10,
    };
    let route = expected_route(0, 2 * topics.max(1), topics, crate::metrics::DEFAULT_D_MAX, e)?;
    let table = serde_json::json!({
        "alpha_without_engine": no_engine_exponent(e.c_u, e.c_t, e.beta),
        "route": route,
        "worst_case_diameter": {
            "u": topics,
            "without_engine": worst_case_diameter(topics, e.p_search, false),
            "with_engine": worst_case_diameter(topics, e.p_search, true),
        },
    });
    out.extra.push(writer.write("theory_route.json", &serde_json::to_string_pretty(&table)?)?);
    writer.write("theory_degree.csv", &csv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl std::str::FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            "fig4" => Ok(Figure::Fig4),
            "fig5" => Ok(Figure::Fig5),
            other => Err(Error::Spec(format!("unknown figure {other:?} (expected fig2..fig5)"))),
        }
    }
}

/// Built-in spec behind each figure.
///
/// * fig2, fig3: degree distribution after 5·10⁴ steps from a connected
///   10+10 seed, 10 paired replicates. fig3 plots the `ln_d` and `ln_count`
///   columns of the same data.
/// * fig4: diameter every 20 steps over 2000 steps from a connected 10+10
///   seed, 10 paired replicates.
/// * fig5: rumor coverage over 200 slots on a graph of about 10⁴ users
///   grown with one copied edge per arrival, 10 paired replicates.
pub fn figure_spec(figure: Figure, output_dir: PathBuf) -> ExperimentSpec {
    let seed = SeedSource::Synthetic { users: 10, topics: 10, connected: true };
    let mut spec = match figure {
        Figure::Fig2 | Figure::Fig3 => ExperimentSpec::new(
            ExperimentKind::DegreeDistribution,
            seed,
            EvolutionConfig { steps: 50_000, ..Default::default() },
            output_dir,
        ),
        Figure::Fig4 => {
            let mut s = ExperimentSpec::new(
                ExperimentKind::DiameterTrace,
                seed,
                EvolutionConfig { steps: 2000, ..Default::default() },
                output_dir,
            );
            s.record_interval = 20;
            s
        }
        Figure::Fig5 => ExperimentSpec::new(
            ExperimentKind::RumorCoverage,
            seed,
            EvolutionConfig { steps: 19_980, c_u: 1, c_t: 1, ..Default::default() },
            output_dir,
        ),
    };
    spec.replicates = 10;
    spec
}

pub fn reproduce_figures(figure: Figure, output_dir: &Path, options: &RunOptions) -> Result<RunArtifacts> {
    run_experiment_with(&figure_spec(figure, output_dir.to_path_buf()), options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::diameter_exact;

    fn small(kind: ExperimentKind, dir: &Path) -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(
            kind,
            SeedSource::Synthetic { users: 10, topics: 10, connected: true },
            EvolutionConfig { steps: 300, seed: 9, ..Default::default() },
            dir.to_path_buf(),
        );
        spec.replicates = 3;
        spec.record_interval = 50;
        if let Some(s) = spec.sir.as_mut() {
            s.max_steps = 30;
            s.initial_fraction = 0.05;
        }
        spec
    }

    fn read(path: &Path) -> String {
        fs::read_to_string(path).unwrap()
    }

    fn csv_rows(path: &Path) -> Vec<Vec<String>> {
        read(path).lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
    }

    #[test]
    fn spec_json_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let spec = small(ExperimentKind::RumorCoverage, dir.path());
        assert_eq!(ExperimentSpec::from_json(&spec.to_json()).unwrap(), spec);

        let bad = |f: &dyn Fn(&mut ExperimentSpec)| {
            let mut s = spec.clone();
            f(&mut s);
            matches!(s.validate(), Err(Error::Spec(_)))
        };
        assert!(bad(&|s| s.replicates = 0));
        assert!(bad(&|s| s.record_interval = 0));
        assert!(bad(&|s| s.schema_version = 7));
        assert!(bad(&|s| s.sir = None));
        assert!(bad(&|s| s.evolution.beta = 1.0));
        assert!(ExperimentSpec::from_json("{\"kind\": 3}").is_err());
        let unknown = spec.to_json().replacen('{', "{\"surprise\": 1,", 1);
        assert!(ExperimentSpec::from_json(&unknown).is_err());
    }

    #[test]
    fn zero_steps_reports_the_seed_graph() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = small(ExperimentKind::DiameterTrace, dir.path());
        spec.evolution.steps = 0;
        spec.replicates = 1;
        spec.engine = EngineMode::Off;
        let art = run_experiment(&spec).unwrap();
        let seed = rng::replicate_seed(spec.evolution.seed, 0);
        let g = Seed::Synthetic { users: 10, topics: 10, connected: true }
            .graph(&spec.evolution, seed)
            .unwrap();
        let d = diameter_exact(&g).unwrap().lower as f64;
        assert_eq!(art.series, vec![SeriesPoint { mode: Mode::Off, x: 0, mean: d, std: 0.0 }]);
        assert_eq!(read(&art.aggregate_csv), format!("t,mean,stddev,mode\n0,{d},0,off\n"));
    }

    #[test]
    fn diameter_aggregate_matches_replicate_files() {
        let dir = tempfile::tempdir().unwrap();
        let art = run_experiment(&small(ExperimentKind::DiameterTrace, dir.path())).unwrap();
        assert_eq!(art.replicate_csvs.len(), 6);
        let agg = csv_rows(&art.aggregate_csv);
        // t = 0, 50, ..., 300 per mode
        assert_eq!(agg.len(), 14);
        for row in &agg {
            let (t, mode) = (&row[0], &row[3]);
            let values: Vec<f64> = art
                .replicate_csvs
                .iter()
                .filter(|p| p.to_string_lossy().contains(&format!("_{mode}_")))
                .map(|p| {
                    let rows = csv_rows(p);
                    rows.iter().find(|r| &r[0] == t).unwrap()[1].parse().unwrap()
                })
                .collect();
            assert_eq!(values.len(), 3);
            let (m, s) = mean_std(&values);
            assert_eq!(row[1].parse::<f64>().unwrap(), m);
            assert_eq!(row[2].parse::<f64>().unwrap(), s);
        }
    }

    #[test]
    fn degree_outputs_and_log_columns() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = small(ExperimentKind::DegreeDistribution, dir.path());
        spec.evolution.steps = 3000;
        spec.fit_d_min = 3;
        let art = run_experiment(&spec).unwrap();
        for row in csv_rows(&art.aggregate_csv) {
            let (d, c): (f64, f64) = (row[0].parse().unwrap(), row[1].parse().unwrap());
            assert!(c > 0.0 && d >= 11.0);
            assert_eq!(row[2].parse::<f64>().unwrap(), d.ln());
            assert_eq!(row[3].parse::<f64>().unwrap(), c.ln());
        }
        assert_eq!(art.fits.len(), 6);
        assert!(art.fits.iter().all(|f| f.mle.is_some()));
        let fits: serde_json::Value = serde_json::from_str(&read(&dir.path().join("fits.json"))).unwrap();
        assert_eq!(fits["theory_alpha_without_engine"], -3.0);
    }

    #[test]
    fn rerun_from_manifest_is_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        for kind in [ExperimentKind::DiameterTrace, ExperimentKind::RumorCoverage] {
            let first = run_experiment(&small(kind, a.path())).unwrap();
            let second = rerun_manifest(&first.manifest_path, b.path(), &RunOptions { threads: Some(1) }).unwrap();
            assert_eq!(read(&first.aggregate_csv), read(&second.aggregate_csv));
            for (x, y) in first.replicate_csvs.iter().zip(&second.replicate_csvs) {
                assert_eq!(read(x), read(y));
            }
        }
    }

    #[test]
    fn rumor_engine_never_trails() {
        let dir = tempfile::tempdir().unwrap();
        let art = run_experiment(&small(ExperimentKind::RumorCoverage, dir.path())).unwrap();
        let on: Vec<_> = art.series_for(Mode::On).collect();
        let off: Vec<_> = art.series_for(Mode::Off).collect();
        assert_eq!(on.len(), 31);
        for (a, b) in on.iter().zip(&off) {
            assert!(a.mean >= b.mean);
            assert!((0.0..=1.0).contains(&a.mean));
        }
        assert_eq!(art.rumor.len(), 6);
    }

    #[test]
    fn theory_tables_need_no_simulation() {
        let dir = tempfile::tempdir().unwrap();
        let art = run_experiment(&small(ExperimentKind::TheoryTables, dir.path())).unwrap();
        assert!(art.replicate_csvs.is_empty());
        let route: serde_json::Value = serde_json::from_str(&read(&dir.path().join("theory_route.json"))).unwrap();
        assert_eq!(route["worst_case_diameter"]["without_engine"], 11.0);
        assert_eq!(route["worst_case_diameter"]["with_engine"], 10.0);
    }

    #[test]
    fn dataset_seed_resolves_step_fraction() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("edges.txt");
        let mut text = String::from("# ring with chords\n");
        for i in 0..40 {
            text += &format!("{i} {}\n{i} {}\n", (i + 1) % 40, (i + 7) % 40);
        }
        fs::write(&data, text).unwrap();
        let mut spec = small(ExperimentKind::DiameterTrace, &dir.path().join("out"));
        spec.seed_graph = SeedSource::Dataset {
            path: data.clone(),
            strategy: BipartizeStrategy::DoubleCover,
            directed: false,
            step_fraction: Some(0.5),
        };
        let art = run_experiment(&spec).unwrap();
        // 40 users + 40 topics
        assert_eq!(art.spec.evolution.steps, 40);
        let manifest: serde_json::Value = serde_json::from_str(&read(&art.manifest_path)).unwrap();
        assert_eq!(manifest["provenance"]["raw_edges"], 80);
        assert_eq!(manifest["spec"]["evolution"]["steps"], 40);

        let missing = SeedSource::Dataset {
            path: dir.path().join("nope.txt"),
            strategy: BipartizeStrategy::DoubleCover,
            directed: false,
            step_fraction: None,
        };
        let err = run_experiment(&ExperimentSpec { seed_graph: missing, ..spec }).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn unwritable_output_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, "x").unwrap();
        let spec = small(ExperimentKind::DiameterTrace, &file.join("sub"));
        assert!(matches!(run_experiment(&spec), Err(Error::Io { .. })));
    }

    #[test]
    fn figure_names_parse() {
        assert_eq!("fig4".parse::<Figure>().unwrap(), Figure::Fig4);
        assert!("fig9".parse::<Figure>().is_err());
        let spec = figure_spec(Figure::Fig4, PathBuf::from("x"));
        assert_eq!((spec.evolution.steps, spec.record_interval, spec.replicates), (2000, 20, 10));
        assert!(spec.validate().is_ok());
    }
}
