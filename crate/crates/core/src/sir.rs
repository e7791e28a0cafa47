//! Discrete-time SIR rumor spreading over users.
//!
//! Two users are in contact when they share at least one topic. Updates are
//! synchronous: every decision in step `t` looks at the state at the start
//! of `t`.
//!
//! Randomness comes from three streams per step (contact, search, recovery),
//! each derived from `(seed, t)`. Every stream yields exactly one uniform per
//! user per step, in user order, whether or not the draw is used. Runs that
//! differ only in `engine_enabled` therefore share their contact and
//! recovery draws.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, NodeRef, Side};
use crate::rng::{self, SimRng};

const SIR_KEY: u64 = 0x5349_52;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExposureModel {
    /// A susceptible user learns the rumor from the engine with probability
    /// `xi * m_t / n`.
    PrevalenceScaled,
    /// Each step the engine surfaces one topic to every susceptible user,
    /// drawn with probability proportional to topic degree. If an infectious
    /// user belongs to that topic, the user is infected with probability
    /// `xi * p_search`.
    TopicMediated { p_search: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SirConfig {
    /// Per-contact infection probability.
    pub lambda_adj: f64,
    /// Per-step recovery probability.
    pub mu: f64,
    /// Search-channel exposure probability.
    pub xi: f64,
    /// Fraction of users aware at t = 0.
    pub initial_fraction: f64,
    pub max_steps: u64,
    pub engine_enabled: bool,
    #[serde(default = "default_exposure")]
    pub exposure_model: ExposureModel,
    pub seed: u64,
}

fn default_exposure() -> ExposureModel {
    ExposureModel::PrevalenceScaled
}

impl Default for SirConfig {
    fn default() -> Self {
        SirConfig {
            lambda_adj: 0.7,
            mu: 0.07,
            xi: 0.7,
            initial_fraction: 0.01,
            max_steps: 200,
            engine_enabled: true,
            exposure_model: ExposureModel::PrevalenceScaled,
            seed: 0,
        }
    }
}

impl SirConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        unit("lambda_adj", self.lambda_adj)?;
        unit("mu", self.mu)?;
        unit("xi", self.xi)?;
        if let ExposureModel::TopicMediated { p_search } = self.exposure_model {
            unit("p_search", p_search)?;
        }
        if !(self.initial_fraction > 0.0 && self.initial_fraction <= 1.0) {
            return Err(Error::Parameter(format!(
                "initial_fraction must lie in (0, 1], got {}",
                self.initial_fraction
            )));
        }
        Ok(())
    }

    /// Number of users infected at t = 0 out of `n` (at least one).
    pub fn initial_count(&self, n: usize) -> usize {
        if n == 0 {
            return 0;
        }
        let raw = (self.initial_fraction * n as f64 - 1e-9).ceil();
        (raw.max(1.0) as usize).min(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Susceptible,
    Infectious,
    Recovered,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SirState {
    pub status: Vec<Status>,
    pub time: u64,
    /// Users ever aware of the rumor (infectious or recovered).
    pub aware: usize,
}

impl SirState {
    pub fn n(&self) -> usize {
        self.status.len()
    }

    /// `(susceptible, infectious, recovered)`
    pub fn counts(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for s in &self.status {
            match s {
                Status::Susceptible => c.0 += 1,
                Status::Infectious => c.1 += 1,
                Status::Recovered => c.2 += 1,
            }
        }
        c
    }

    pub fn infectious(&self) -> impl Iterator<Item = usize> + '_ {
        self.status
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Status::Infectious)
            .map(|(i, _)| i)
    }
}

/// `m_t / n`, or 0 for an empty population.
pub fn rumor_coverage(state: &SirState) -> f64 {
    if state.n() == 0 {
        0.0
    } else {
        state.aware as f64 / state.n() as f64
    }
}

/// Infect `initial_count(n)` distinct users chosen uniformly.
pub fn sir_init(graph: &BipartiteGraph, config: &SirConfig) -> Result<SirState> {
    config.validate()?;
    let n = graph.num_users();
    if n == 0 {
        return Err(Error::Parameter("rumor spreading needs at least one user".into()));
    }
    let k = config.initial_count(n);
    let mut rng = rng::stream(config.seed, &[SIR_KEY, 0, 9]);
    let mut status = vec![Status::Susceptible; n];
    for i in index::sample(&mut rng, n, k) {
        status[i] = Status::Infectious;
    }
    Ok(SirState { status, time: 0, aware: k })
}

/// For every susceptible user, the number of distinct infectious users it
/// shares a topic with. Other entries are 0.
pub fn infectious_contacts(graph: &BipartiteGraph, state: &SirState) -> Vec<u32> {
    let n = state.n();
    let mut contacts = vec![0u32; n];
    // last counted source per target, offset by one
    let mut stamp = vec![0u32; n];
    let (s, i, _) = state.counts();
    let co_members = |v: usize| {
        graph
            .neighbors(NodeRef::user(v))
            .iter()
            .flat_map(move |&t| graph.neighbors(NodeRef::topic(t as usize)).iter().map(|&w| w as usize))
    };
    if i <= s {
        for src in state.infectious() {
            for v in co_members(src) {
                if v != src && state.status[v] == Status::Susceptible && stamp[v] != src as u32 + 1 {
                    stamp[v] = src as u32 + 1;
                    contacts[v] += 1;
                }
            }
        }
    } else {
        for v in 0..n {
            if state.status[v] != Status::Susceptible {
                continue;
            }
            let mut k = 0;
            for w in co_members(v) {
                if state.status[w] == Status::Infectious && stamp[w] != v as u32 + 1 {
                    stamp[w] = v as u32 + 1;
                    k += 1;
                }
            }
            contacts[v] = k;
        }
    }
    contacts
}

struct SirStreams {
    contact: SimRng,
    search: SimRng,
    recovery: SimRng,
}

impl SirStreams {
    fn for_step(seed: u64, time: u64) -> Self {
        SirStreams {
            contact: rng::stream(seed, &[SIR_KEY, time, 0]),
            search: rng::stream(seed, &[SIR_KEY, time, 1]),
            recovery: rng::stream(seed, &[SIR_KEY, time, 2]),
        }
    }
}

/// Advance one synchronous time slot.
pub fn sir_step(state: &SirState, graph: &BipartiteGraph, config: &SirConfig) -> SirState {
    let n = state.n();
    debug_assert_eq!(n, graph.num_users());
    let time = state.time + 1;
    let mut streams = SirStreams::for_step(config.seed, time);
    let mut next = state.status.clone();
    let mut newly = 0;

    let contacts = infectious_contacts(graph, state);
    let escape = 1.0 - config.lambda_adj;
    for v in 0..n {
        let u: f64 = streams.contact.gen();
        if state.status[v] == Status::Susceptible && contacts[v] > 0 && u < 1.0 - escape.powi(contacts[v] as i32) {
            next[v] = Status::Infectious;
            newly += 1;
        }
    }

    if config.engine_enabled {
        match config.exposure_model {
            ExposureModel::PrevalenceScaled => {
                let p = config.xi * rumor_coverage(state);
                for v in 0..n {
                    let u: f64 = streams.search.gen();
                    if next[v] == Status::Susceptible && u < p {
                        next[v] = Status::Infectious;
                        newly += 1;
                    }
                }
            }
            ExposureModel::TopicMediated { p_search } => {
                let mut hot = vec![false; graph.num_topics()];
                for src in state.infectious() {
                    for &t in graph.neighbors(NodeRef::user(src)) {
                        hot[t as usize] = true;
                    }
                }
                let p = config.xi * p_search;
                let has_topics = graph.total_degree(Side::Topic) > 0;
                for v in 0..n {
                    let u: f64 = streams.search.gen();
                    if !has_topics {
                        continue;
                    }
                    let surfaced = graph
                        .sample_preferential(Side::Topic, &mut streams.search)
                        .expect("topic side has mass")
                        .index;
                    if next[v] == Status::Susceptible && hot[surfaced] && u < p {
                        next[v] = Status::Infectious;
                        newly += 1;
                    }
                }
            }
        }
    }

    for v in 0..n {
        let u: f64 = streams.recovery.gen();
        if state.status[v] == Status::Infectious && u < config.mu {
            next[v] = Status::Recovered;
        }
    }

    SirState {
        status: next,
        time,
        aware: state.aware + newly,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirPoint {
    pub t: u64,
    pub susceptible: usize,
    pub infectious: usize,
    pub recovered: usize,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SirTrace {
    /// One point per recorded step, starting at t = 0.
    pub points: Vec<SirPoint>,
    pub final_state: SirState,
    /// First step from which coverage no longer changes.
    pub steps_to_stability: u64,
}

impl SirTrace {
    pub fn coverage(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.coverage).collect()
    }

    /// Coverage at `t`; after the run stopped the last value holds.
    pub fn coverage_at(&self, t: u64) -> f64 {
        let i = (t as usize).min(self.points.len() - 1);
        self.points[i].coverage
    }

    /// Point at `t`, carrying the final state forward past the end.
    pub fn point_at(&self, t: u64) -> SirPoint {
        let last = *self.points.last().expect("trace has t = 0");
        match self.points.get(t as usize) {
            Some(p) => *p,
            None => SirPoint { t, ..last },
        }
    }

    /// First step at which coverage reaches `level`.
    pub fn first_reaching(&self, level: f64) -> Option<u64> {
        self.points.iter().find(|p| p.coverage >= level).map(|p| p.t)
    }

    /// `t,susceptible,infectious,recovered,coverage` for t in `0..=horizon`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W, horizon: u64) -> std::io::Result<()> {
        writeln!(out, "t,susceptible,infectious,recovered,coverage")?;
        for t in 0..=horizon {
            let p = self.point_at(t);
            writeln!(out, "{},{},{},{},{}", t, p.susceptible, p.infectious, p.recovered, p.coverage)?;
        }
        Ok(())
    }
}

fn point(state: &SirState) -> SirPoint {
    let (s, i, r) = state.counts();
    SirPoint {
        t: state.time,
        susceptible: s,
        infectious: i,
        recovered: r,
        coverage: rumor_coverage(state),
    }
}

/// Run until `max_steps` or until no user is infectious.
pub fn run_sir(graph: &BipartiteGraph, config: &SirConfig) -> Result<SirTrace> {
    let mut state = sir_init(graph, config)?;
    let mut points = vec![point(&state)];
    while state.time < config.max_steps && state.infectious().next().is_some() {
        state = sir_step(&state, graph, config);
        let p = point(&state);
        if p.susceptible + p.infectious + p.recovered != state.n() {
            return Err(Error::Domain(format!("compartments do not partition users at t = {}", p.t)));
        }
        points.push(p);
    }
    let last = points.last().expect("t = 0 recorded").coverage;
    let steps_to_stability = points.iter().rev().take_while(|p| p.coverage == last).last().map_or(0, |p| p.t);
    Ok(SirTrace {
        points,
        final_state: state,
        steps_to_stability,
    })
}
