//! Growth of the search network, one arrival per time step.
//!
//! Each step draws from two streams derived from `(seed, step)`:
//!
//! * the main stream, in this order: arrival side (`gen_bool(beta)`),
//!   prototype (one `gen_range` over the side's total degree), copy choices
//!   (partial Fisher-Yates over the prototype's neighbor list, one
//!   `gen_range(j..deg)` per copied edge), search gate (`gen_bool(p_search)`);
//! * the search stream, used only for the search-engine candidates.
//!
//! Runs that differ only in `p_search` or the search policy therefore see the
//! same side coins and the same raw prototype/copy draws at every step.

use std::collections::HashSet;
use std::io::Write;
use std::ops::RangeInclusive;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{BipartiteGraph, NodeRef, Side};
use crate::rng::{self, SimRng};

/// Rejection attempts for degree-ranked candidates before falling back to an
/// exact scan over the eligible candidates.
pub const MAX_REJECTIONS: usize = 64;

const STEP_KEY: u64 = 0x5354_4550;

/// How the search engine ranks opposite-side candidates for a new node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SearchPolicy {
    /// Every non-adjacent candidate equally likely.
    UniformRandom,
    /// Candidate weight `degree^exponent`.
    DegreeRanked { exponent: f64 },
    /// Candidate weight `jaccard + smoothing`, where `jaccard` compares the
    /// candidate's neighbor set with the new node's co-affiliates (same-side
    /// nodes sharing at least one neighbor with it).
    SimilarityRanked { smoothing: f64 },
}

impl Default for SearchPolicy {
    fn default() -> Self {
        SearchPolicy::DegreeRanked { exponent: 1.0 }
    }
}

impl SearchPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SearchPolicy::UniformRandom => Ok(()),
            SearchPolicy::DegreeRanked { exponent } if exponent.is_finite() && exponent >= 0.0 => Ok(()),
            SearchPolicy::SimilarityRanked { smoothing } if smoothing.is_finite() && smoothing > 0.0 => Ok(()),
            ref p => Err(Error::Parameter(format!("search policy {p:?} has invalid weights"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    /// Probability that a step adds a user (otherwise a topic).
    pub beta: f64,
    /// Probability that the search engine fires for an arrival.
    pub p_search: f64,
    /// Edges copied by a new user.
    pub c_u: usize,
    /// Edges copied by a new topic.
    pub c_t: usize,
    /// Edges added when the engine fires; `None` means `c_u` for users and
    /// `c_t` for topics.
    #[serde(default)]
    pub search_edges_per_activation: Option<usize>,
    #[serde(default)]
    pub search_policy: SearchPolicy,
    pub steps: u64,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            beta: 0.5,
            p_search: 0.1,
            c_u: 2,
            c_t: 2,
            search_edges_per_activation: None,
            search_policy: SearchPolicy::default(),
            steps: 1000,
            seed: 0,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Parameter(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if !(self.p_search >= 0.0 && self.p_search < 1.0) {
            return Err(Error::Parameter(format!("p_search must lie in [0, 1), got {}", self.p_search)));
        }
        if self.c_u == 0 || self.c_t == 0 {
            return Err(Error::Parameter("c_u and c_t must be positive".into()));
        }
        if self.search_edges_per_activation == Some(0) {
            return Err(Error::Parameter("search_edges_per_activation must be positive".into()));
        }
        self.search_policy.validate()
    }

    pub fn copies_for(&self, side: Side) -> usize {
        match side {
            Side::User => self.c_u,
            Side::Topic => self.c_t,
        }
    }

    pub fn search_edges_for(&self, side: Side) -> usize {
        self.search_edges_per_activation.unwrap_or_else(|| self.copies_for(side))
    }

    /// Same configuration with the search engine switched off.
    pub fn without_engine(&self) -> Self {
        EvolutionConfig {
            p_search: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub time: u64,
    pub arrival_side: Side,
    pub new_node: NodeRef,
    pub prototype: NodeRef,
    /// Opposite-side nodes the new node copied from its prototype.
    pub copied_edges: Vec<NodeRef>,
    pub search_fired: bool,
    /// Opposite-side nodes connected by the search engine.
    pub search_edges: Vec<NodeRef>,
}

/// The random streams consumed by one step.
pub struct StepStreams {
    pub main: SimRng,
    pub search: SimRng,
}

impl StepStreams {
    pub fn for_step(seed: u64, time: u64) -> Self {
        StepStreams {
            main: rng::stream(seed, &[STEP_KEY, time, 0]),
            search: rng::stream(seed, &[STEP_KEY, time, 1]),
        }
    }
}

/// Apply one arrival at `time`.
pub fn evolve_step(graph: &mut BipartiteGraph, config: &EvolutionConfig, time: u64) -> Result<StepReport> {
    let mut streams = StepStreams::for_step(config.seed, time);
    evolve_step_with(graph, config, time, &mut streams)
}

pub fn evolve_step_with(
    graph: &mut BipartiteGraph,
    config: &EvolutionConfig,
    time: u64,
    streams: &mut StepStreams,
) -> Result<StepReport> {
    let main = &mut streams.main;
    let side = if main.gen_bool(config.beta) { Side::User } else { Side::Topic };
    let prototype = graph.sample_preferential(side, main)?;

    let mut pool: Vec<u32> = graph.neighbors(prototype).to_vec();
    let k = config.copies_for(side).min(pool.len());
    for j in 0..k {
        let r = main.gen_range(j..pool.len());
        pool.swap(j, r);
    }
    pool.truncate(k);
    let fired = main.gen_bool(config.p_search);

    let other = side.opposite();
    let new_node = graph.add_node(side);
    let copied_edges: Vec<NodeRef> = pool
        .into_iter()
        .map(|i| NodeRef { side: other, index: i as usize })
        .collect();
    for &target in &copied_edges {
        graph.connect(new_node, target)?;
    }

    let mut search_edges = Vec::new();
    if fired {
        let wanted = config.search_edges_for(side);
        let mut weights = None;
        for _ in 0..wanted {
            let pick = match config.search_policy {
                SearchPolicy::UniformRandom => graph.random_non_neighbor(new_node, &mut streams.search),
                SearchPolicy::DegreeRanked { exponent } if exponent == 1.0 => {
                    degree_proportional_non_neighbor(graph, new_node, &mut streams.search)
                }
                _ => {
                    let w = weights.get_or_insert_with(|| candidate_weights(graph, new_node, &config.search_policy));
                    let pick = weighted_pick(w, &mut streams.search);
                    if let Some(c) = pick {
                        w[c] = 0.0;
                    }
                    pick
                }
            };
            let Some(c) = pick else { break };
            let target = NodeRef { side: other, index: c };
            graph.connect(new_node, target)?;
            search_edges.push(target);
        }
    }

    Ok(StepReport {
        time,
        arrival_side: side,
        new_node,
        prototype,
        copied_edges,
        search_fired: fired,
        search_edges,
    })
}

fn adjacent(graph: &BipartiteGraph, node: NodeRef, candidate: usize) -> bool {
    match node.side {
        Side::User => graph.has_edge(node.index, candidate),
        Side::Topic => graph.has_edge(candidate, node.index),
    }
}

/// Degree-proportional draw on the opposite side of `node`, skipping nodes
/// already adjacent to it.
fn degree_proportional_non_neighbor(graph: &BipartiteGraph, node: NodeRef, rng: &mut SimRng) -> Option<usize> {
    let other = node.side.opposite();
    if graph.total_degree(other) == 0 {
        return None;
    }
    for _ in 0..MAX_REJECTIONS {
        let c = graph.sample_preferential(other, rng).ok()?.index;
        if !adjacent(graph, node, c) {
            return Some(c);
        }
    }
    let w = candidate_weights(graph, node, &SearchPolicy::DegreeRanked { exponent: 1.0 });
    weighted_pick(&w, rng)
}

/// Policy weights for every opposite-side node; adjacent candidates get 0.
pub fn candidate_weights(graph: &BipartiteGraph, node: NodeRef, policy: &SearchPolicy) -> Vec<f64> {
    let other = node.side.opposite();
    let n = graph.node_count(other);
    let mut w: Vec<f64> = match *policy {
        SearchPolicy::UniformRandom => vec![1.0; n],
        SearchPolicy::DegreeRanked { exponent } => (0..n)
            .map(|c| (graph.degree(NodeRef { side: other, index: c }) as f64).powf(exponent))
            .collect(),
        SearchPolicy::SimilarityRanked { smoothing } => {
            let co: HashSet<u32> = graph
                .neighbors(node)
                .iter()
                .flat_map(|&m| graph.neighbors(NodeRef { side: other, index: m as usize }).iter().copied())
                .filter(|&v| v as usize != node.index)
                .collect();
            (0..n)
                .map(|c| {
                    let members = graph.neighbors(NodeRef { side: other, index: c });
                    let shared = members.iter().filter(|v| co.contains(v)).count();
                    let union = members.len() + co.len() - shared;
                    let jaccard = if union == 0 { 0.0 } else { shared as f64 / union as f64 };
                    jaccard + smoothing
                })
                .collect()
        }
    };
    for &m in graph.neighbors(node) {
        w[m as usize] = 0.0;
    }
    w
}

/// Index drawn with probability proportional to `weights` using one uniform
/// `f64`, or `None` if all weights are zero.
pub fn weighted_pick<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut target = rng.gen::<f64>() * total;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        if target < w {
            return Some(i);
        }
        target -= w;
        last = Some(i);
    }
    last
}

/// Receives every step of a run.
pub trait Observer {
    fn on_step(&mut self, graph: &BipartiteGraph, report: &StepReport) -> std::result::Result<(), String>;
}

impl<F> Observer for F
where
    F: FnMut(&BipartiteGraph, &StepReport) -> std::result::Result<(), String>,
{
    fn on_step(&mut self, graph: &BipartiteGraph, report: &StepReport) -> std::result::Result<(), String> {
        self(graph, report)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub reports: Vec<StepReport>,
}

impl EvolutionTrace {
    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.reports {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Run steps `1..=config.steps`.
pub fn run_evolution(
    graph: &mut BipartiteGraph,
    config: &EvolutionConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<EvolutionTrace> {
    run_steps(graph, config, 1..=config.steps, observers)
}

/// Run an explicit range of step indices. Splitting a run into consecutive
/// ranges gives the same result as one call over their union.
pub fn run_steps(
    graph: &mut BipartiteGraph,
    config: &EvolutionConfig,
    times: RangeInclusive<u64>,
    observers: &mut [&mut dyn Observer],
) -> Result<EvolutionTrace> {
    config.validate()?;
    let mut trace = EvolutionTrace::default();
    for time in times {
        let report = evolve_step(graph, config, time)?;
        for obs in observers.iter_mut() {
            obs.on_step(graph, &report)
                .map_err(|message| Error::Observer { step: time, message })?;
        }
        trace.reports.push(report);
    }
    Ok(trace)
}
