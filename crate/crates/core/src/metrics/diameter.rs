//! Diameter of the largest connected component.
//!
//! Users and topics are both nodes here, so a user-to-user hop through a
//! shared topic counts as distance 2.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;

/// Component size above which [`diameter_exact`] refuses to run.
pub const DEFAULT_EXACT_LIMIT: usize = 5000;

const UNSEEN: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiameterMethod {
    /// BFS from every node of the component.
    ExactBfs,
    /// Eccentricity-bound pruning; exact, usually a handful of BFS runs.
    BoundedBfs,
    /// Repeated double sweeps; lower and upper bounds only.
    DoubleSweepBounds,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiameterReport {
    pub lower: usize,
    pub upper: usize,
    pub component_size: usize,
    pub method: DiameterMethod,
    pub is_exact: bool,
}

impl DiameterReport {
    /// The diameter, when the bounds meet.
    pub fn value(&self) -> Option<usize> {
        (self.lower == self.upper).then_some(self.lower)
    }

    fn exact(value: usize, component_size: usize, method: DiameterMethod) -> Self {
        DiameterReport {
            lower: value,
            upper: value,
            component_size,
            method,
            is_exact: true,
        }
    }
}

/// BFS workspace over the flattened node numbering.
struct Bfs<'g> {
    graph: &'g BipartiteGraph,
    dist: Vec<u32>,
    queue: VecDeque<usize>,
    touched: Vec<usize>,
}

impl<'g> Bfs<'g> {
    fn new(graph: &'g BipartiteGraph) -> Self {
        Bfs {
            graph,
            dist: vec![UNSEEN; graph.num_users() + graph.num_topics()],
            queue: VecDeque::new(),
            touched: Vec::new(),
        }
    }

    /// Eccentricity of `source` and the last node reached (a farthest one).
    fn run(&mut self, source: usize) -> (usize, usize) {
        for &v in &self.touched {
            self.dist[v] = UNSEEN;
        }
        self.touched.clear();
        self.dist[source] = 0;
        self.touched.push(source);
        self.queue.push_back(source);
        let mut last = source;
        while let Some(v) = self.queue.pop_front() {
            last = v;
            let dv = self.dist[v];
            for w in self.graph.flat_neighbors(v) {
                if self.dist[w] == UNSEEN {
                    self.dist[w] = dv + 1;
                    self.touched.push(w);
                    self.queue.push_back(w);
                }
            }
        }
        (self.dist[last] as usize, last)
    }
}

/// Largest component in flattened numbering; the earliest-found one wins ties.
fn largest_component(graph: &BipartiteGraph) -> Vec<usize> {
    graph
        .components()
        .into_iter()
        .fold(Vec::new(), |best, c| if c.len() > best.len() { c } else { best })
}

pub fn diameter_exact(graph: &BipartiteGraph) -> Result<DiameterReport> {
    diameter_exact_with_limit(graph, DEFAULT_EXACT_LIMIT)
}

/// Maximum eccentricity over the largest component, by BFS from each of
/// its nodes.
pub fn diameter_exact_with_limit(graph: &BipartiteGraph, limit: usize) -> Result<DiameterReport> {
    let comp = largest_component(graph);
    if comp.len() > limit {
        return Err(Error::ComponentTooLarge { size: comp.len(), limit });
    }
    let mut bfs = Bfs::new(graph);
    let d = comp.iter().map(|&v| bfs.run(v).0).max().unwrap_or(0);
    Ok(DiameterReport::exact(d, comp.len(), DiameterMethod::ExactBfs))
}

/// Exact diameter of the largest component using eccentricity bounds.
///
/// After a BFS from `v` with eccentricity `e`, every node `w` at distance
/// `d` satisfies `max(d, e - d) <= ecc(w) <= e + d`. Sources alternate
/// between the largest upper bound and the smallest lower bound; nodes whose
/// bounds can no longer move the diameter bounds are dropped from the
/// candidate set.
pub fn diameter_bounded(graph: &BipartiteGraph) -> DiameterReport {
    let comp = largest_component(graph);
    let size = comp.len();
    if size <= 1 {
        return DiameterReport::exact(0, size, DiameterMethod::BoundedBfs);
    }
    let degree = |v: usize| graph.flat_neighbors(v).count();
    let mut lo = vec![0usize; size];
    let mut hi = vec![usize::MAX; size];
    let mut candidates: Vec<usize> = (0..size).collect();
    let (mut d_lo, mut d_hi) = (0usize, usize::MAX);
    let mut bfs = Bfs::new(graph);
    let mut pick_high = true;

    while d_lo < d_hi && !candidates.is_empty() {
        let pos = if pick_high {
            argbest(&candidates, |i| (hi[i], degree(comp[i])))
        } else {
            argbest(&candidates, |i| (usize::MAX - lo[i], degree(comp[i])))
        };
        pick_high = !pick_high;
        let src = candidates[pos];
        let (ecc, _) = bfs.run(comp[src]);
        lo[src] = ecc;
        hi[src] = ecc;
        for i in 0..size {
            let d = bfs.dist[comp[i]] as usize;
            lo[i] = lo[i].max(d.max(ecc - d));
            hi[i] = hi[i].min(ecc + d);
        }
        d_lo = lo.iter().copied().max().unwrap_or(0);
        d_hi = hi.iter().copied().max().unwrap_or(0);
        candidates.retain(|&i| lo[i] != hi[i] && !(hi[i] <= d_lo && 2 * lo[i] >= d_hi));
    }
    debug_assert_eq!(d_lo, d_hi);
    DiameterReport::exact(d_lo, size, DiameterMethod::BoundedBfs)
}

fn argbest<K: Ord>(candidates: &[usize], key: impl Fn(usize) -> K) -> usize {
    let mut best = 0;
    let mut best_key = key(candidates[0]);
    for (pos, &i) in candidates.iter().enumerate().skip(1) {
        let k = key(i);
        if k > best_key {
            best = pos;
            best_key = k;
        }
    }
    best
}

/// Diameter bounds from `sweeps` double sweeps started at uniformly random
/// nodes of the largest component.
///
/// The lower bound is the largest eccentricity found; the upper bound is
/// twice the smallest eccentricity observed.
pub fn diameter_approx<R: Rng + ?Sized>(graph: &BipartiteGraph, sweeps: usize, rng: &mut R) -> DiameterReport {
    let comp = largest_component(graph);
    if comp.len() <= 1 {
        return DiameterReport::exact(0, comp.len(), DiameterMethod::DoubleSweepBounds);
    }
    let mut bfs = Bfs::new(graph);
    let (mut lower, mut upper) = (0, usize::MAX);
    for _ in 0..sweeps.max(1) {
        let start = comp[rng.gen_range(0..comp.len())];
        let (e_start, far) = bfs.run(start);
        let (e_far, _) = bfs.run(far);
        lower = lower.max(e_far);
        upper = upper.min(2 * e_start.min(e_far));
    }
    DiameterReport {
        lower,
        upper,
        component_size: comp.len(),
        method: DiameterMethod::DoubleSweepBounds,
        is_exact: lower == upper,
    }
}
