//! Edge-list ingestion and conversion to bipartite seed graphs.
//!
//! Two text formats are read:
//!
//! * plain edge lists: one `a b` pair of integer ids per line, extra columns
//!   ignored, `#` starts a comment line;
//! * bipartite edge lists: the first non-comment line is `BIPARTITE`, then
//!   `user topic` pairs. User and topic ids live in separate namespaces.
//!
//! The native graph format written by [`write_graph`] is a bipartite edge
//! list over dense indices with a `# users=N topics=M` line so isolated
//! nodes survive a round trip.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{seed::top_up, BipartiteGraph, NodeRef, Side};
use crate::rng;

pub const BIPARTITE_HEADER: &str = "BIPARTITE";

const SPLIT_KEY: u64 = 0x5350_4c49;
const TOPUP_KEY: u64 = 0x544f_5055;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Keep `a b` and `b a` as distinct edges.
    pub directed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawGraph {
    /// Original id of each dense node index.
    pub ids: Vec<i64>,
    /// Side of each node, for bipartite inputs.
    pub sides: Option<Vec<Side>>,
    pub edges: Vec<(u32, u32)>,
    pub directed: bool,
    pub source: String,
    pub self_loops_dropped: usize,
    pub duplicates_dropped: usize,
}

impl RawGraph {
    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as pairs of original ids.
    pub fn id_edges(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.edges
            .iter()
            .map(|&(a, b)| (self.ids[a as usize], self.ids[b as usize]))
    }
}

fn parse_id(token: &str, line: usize) -> Result<i64> {
    token.parse().map_err(|_| Error::Parse {
        line,
        message: format!("expected an integer node id, found {token:?}"),
    })
}

/// Parse an edge list. Self-loops and duplicate edges are dropped and
/// counted; nodes are numbered in order of first appearance.
pub fn load_edge_list<R: BufRead>(reader: R, source: &str, options: LoadOptions) -> Result<RawGraph> {
    let mut bipartite = None;
    let mut index: HashMap<(Option<Side>, i64), u32> = HashMap::new();
    let mut ids = Vec::new();
    let mut sides = Vec::new();
    let mut seen = HashSet::new();
    let mut raw = RawGraph {
        ids: Vec::new(),
        sides: None,
        edges: Vec::new(),
        directed: options.directed,
        source: source.to_string(),
        self_loops_dropped: 0,
        duplicates_dropped: 0,
    };

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if bipartite.is_none() {
            let header = line == BIPARTITE_HEADER;
            bipartite = Some(header);
            if header {
                continue;
            }
        }
        let bip = bipartite == Some(true);
        let mut tokens = line.split_whitespace();
        let (Some(a), Some(b)) = (tokens.next(), tokens.next()) else {
            return Err(Error::Parse {
                line: lineno,
                message: "expected two node ids".into(),
            });
        };
        let (a, b) = (parse_id(a, lineno)?, parse_id(b, lineno)?);
        if !bip && a == b {
            raw.self_loops_dropped += 1;
            continue;
        }
        let (ka, kb) = if bip {
            ((Some(Side::User), a), (Some(Side::Topic), b))
        } else {
            ((None, a), (None, b))
        };
        let mut intern = |key: (Option<Side>, i64)| {
            *index.entry(key).or_insert_with(|| {
                ids.push(key.1);
                sides.push(key.0.unwrap_or(Side::User));
                ids.len() as u32 - 1
            })
        };
        let (ia, ib) = (intern(ka), intern(kb));
        let key = if options.directed || bip { (ia, ib) } else { (ia.min(ib), ia.max(ib)) };
        if seen.insert(key) {
            raw.edges.push((ia, ib));
        } else {
            raw.duplicates_dropped += 1;
        }
    }

    if raw.edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    raw.ids = ids;
    if bipartite == Some(true) {
        raw.sides = Some(sides);
    }
    Ok(raw)
}

/// Write `raw` back in the format it was read from, using original ids.
pub fn write_edge_list<W: Write>(raw: &RawGraph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# source: {}", raw.source)?;
    writeln!(out, "# nodes: {} edges: {}", raw.node_count(), raw.edge_count())?;
    if raw.sides.is_some() {
        writeln!(out, "{BIPARTITE_HEADER}")?;
    }
    for (a, b) in raw.id_edges() {
        writeln!(out, "{a}\t{b}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BipartizeStrategy {
    /// The input already labels users and topics (`BIPARTITE` format).
    DirectBipartite,
    /// Every node becomes one user and one topic; edge `(a, b)` links user
    /// `a` to topic `b`, and also user `b` to topic `a` when undirected.
    DoubleCover,
    /// Each node independently becomes a user with probability
    /// `split_fraction`; edges joining two nodes on the same side are dropped.
    RandomSplit { split_fraction: f64, seed: u64 },
}

impl Default for BipartizeStrategy {
    fn default() -> Self {
        BipartizeStrategy::DoubleCover
    }
}

#[derive(Debug, Clone)]
pub struct Bipartized {
    pub graph: BipartiteGraph,
    /// Original id of each user and topic index.
    pub user_ids: Vec<i64>,
    pub topic_ids: Vec<i64>,
    pub dropped_edges: usize,
}

/// Side assignment used by [`BipartizeStrategy::RandomSplit`]: node `i` is a
/// user iff the `i`-th uniform of the split stream is below `fraction`.
pub fn split_assignment(nodes: usize, fraction: f64, seed: u64) -> Vec<Side> {
    let mut r = rng::stream(seed, &[SPLIT_KEY]);
    (0..nodes)
        .map(|_| if r.gen::<f64>() < fraction { Side::User } else { Side::Topic })
        .collect()
}

pub fn bipartize(raw: &RawGraph, strategy: &BipartizeStrategy) -> Result<Bipartized> {
    if raw.edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let sides: Vec<Side> = match strategy {
        BipartizeStrategy::DirectBipartite => raw
            .sides
            .clone()
            .ok_or_else(|| Error::Bipartize("direct strategy needs a BIPARTITE input".into()))?,
        BipartizeStrategy::DoubleCover => return Ok(double_cover(raw)),
        BipartizeStrategy::RandomSplit { split_fraction, seed } => {
            if !(*split_fraction > 0.0 && *split_fraction < 1.0) {
                return Err(Error::Bipartize(format!(
                    "split_fraction must lie in (0, 1), got {split_fraction}"
                )));
            }
            split_assignment(raw.node_count(), *split_fraction, *seed)
        }
    };

    let mut local = vec![0usize; raw.node_count()];
    let (mut user_ids, mut topic_ids) = (Vec::new(), Vec::new());
    for (i, side) in sides.iter().enumerate() {
        let list = match side {
            Side::User => &mut user_ids,
            Side::Topic => &mut topic_ids,
        };
        local[i] = list.len();
        list.push(raw.ids[i]);
    }
    if user_ids.is_empty() || topic_ids.is_empty() {
        return Err(Error::Bipartize("strategy left one side empty".into()));
    }
    let mut graph = BipartiteGraph::with_nodes(user_ids.len(), topic_ids.len());
    let mut dropped = 0;
    for &(a, b) in &raw.edges {
        let (a, b) = (a as usize, b as usize);
        match (sides[a], sides[b]) {
            (Side::User, Side::Topic) => graph.insert_edge(local[a], local[b]),
            (Side::Topic, Side::User) => graph.insert_edge(local[b], local[a]),
            _ => {
                dropped += 1;
                continue;
            }
        };
    }
    Ok(Bipartized {
        graph,
        user_ids,
        topic_ids,
        dropped_edges: dropped,
    })
}

fn double_cover(raw: &RawGraph) -> Bipartized {
    let n = raw.node_count();
    let mut graph = BipartiteGraph::with_nodes(n, n);
    for &(a, b) in &raw.edges {
        graph.insert_edge(a as usize, b as usize);
        if !raw.directed {
            graph.insert_edge(b as usize, a as usize);
        }
    }
    Bipartized {
        graph,
        user_ids: raw.ids.clone(),
        topic_ids: raw.ids.clone(),
        dropped_edges: 0,
    }
}

#[derive(Debug, Clone)]
pub struct SeededDataset {
    pub bipartized: Bipartized,
    /// Random edges added to meet the minimum degrees.
    pub topped_up: usize,
}

/// Bipartize `raw` and add uniformly random edges until every user has
/// degree `>= c_u` and every topic `>= c_t` (users first).
pub fn seed_from_dataset(
    raw: &RawGraph,
    strategy: &BipartizeStrategy,
    c_u: usize,
    c_t: usize,
    seed: u64,
) -> Result<SeededDataset> {
    let mut b = bipartize(raw, strategy)?;
    let g = &b.graph;
    if c_u > g.num_topics() || c_t > g.num_users() {
        return Err(Error::Parameter(format!(
            "minimum degrees c_u = {c_u}, c_t = {c_t} infeasible for {} users and {} topics",
            g.num_users(),
            g.num_topics()
        )));
    }
    let mut r = rng::stream(seed, &[TOPUP_KEY]);
    let topped_up = top_up(&mut b.graph, Side::User, c_u, &mut r) + top_up(&mut b.graph, Side::Topic, c_t, &mut r);
    Ok(SeededDataset { bipartized: b, topped_up })
}

/// JSON sidecar describing how a seed graph was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub raw_nodes: usize,
    pub raw_edges: usize,
    pub directed: bool,
    pub self_loops_dropped: usize,
    pub duplicates_dropped: usize,
    pub strategy: BipartizeStrategy,
    pub seed: u64,
    pub dropped_edges: usize,
    pub topped_up: usize,
    pub users: usize,
    pub topics: usize,
    pub edges: usize,
}

impl Provenance {
    pub fn new(raw: &RawGraph, strategy: &BipartizeStrategy, seed: u64, seeded: &SeededDataset) -> Self {
        let g = &seeded.bipartized.graph;
        Provenance {
            source: raw.source.clone(),
            raw_nodes: raw.node_count(),
            raw_edges: raw.edge_count(),
            directed: raw.directed,
            self_loops_dropped: raw.self_loops_dropped,
            duplicates_dropped: raw.duplicates_dropped,
            strategy: strategy.clone(),
            seed,
            dropped_edges: seeded.bipartized.dropped_edges,
            topped_up: seeded.topped_up,
            users: g.num_users(),
            topics: g.num_topics(),
            edges: g.edge_count(),
        }
    }
}

/// Write a graph in the native bipartite format.
pub fn write_graph<W: Write>(graph: &BipartiteGraph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{BIPARTITE_HEADER}")?;
    writeln!(out, "# users={} topics={}", graph.num_users(), graph.num_topics())?;
    for (u, t) in graph.edges_in_order() {
        writeln!(out, "{u}\t{t}")?;
    }
    Ok(())
}

/// Read a graph written by [`write_graph`]. Ids are taken as dense indices;
/// without a `# users=N topics=M` line the sides are sized by the largest id.
pub fn read_graph<R: BufRead>(reader: R, source: &str) -> Result<BipartiteGraph> {
    let mut sizes: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut header = false;
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(s) = parse_sizes(rest) {
                sizes = Some(s);
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if !header {
            if line != BIPARTITE_HEADER {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("graph files start with {BIPARTITE_HEADER}"),
                });
            }
            header = true;
            continue;
        }
        let mut tokens = line.split_whitespace();
        let (Some(a), Some(b)) = (tokens.next(), tokens.next()) else {
            return Err(Error::Parse { line: lineno, message: "expected user and topic".into() });
        };
        let to_index = |tok: &str| -> Result<usize> {
            tok.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("expected a non-negative index, found {tok:?}"),
            })
        };
        edges.push((to_index(a)?, to_index(b)?, lineno));
    }
    let (nu, nt) = sizes.unwrap_or_else(|| {
        let nu = edges.iter().map(|e| e.0 + 1).max().unwrap_or(0);
        let nt = edges.iter().map(|e| e.1 + 1).max().unwrap_or(0);
        (nu, nt)
    });
    let mut g = BipartiteGraph::with_nodes(nu, nt);
    for (u, t, lineno) in edges {
        g.add_edge(NodeRef::user(u), NodeRef::topic(t)).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
    }
    Ok(g)
}

fn parse_sizes(comment: &str) -> Option<(usize, usize)> {
    let mut users = None;
    let mut topics = None;
    for tok in comment.split_whitespace() {
        if let Some(v) = tok.strip_prefix("users=") {
            users = v.parse().ok();
        } else if let Some(v) = tok.strip_prefix("topics=") {
            topics = v.parse().ok();
        }
    }
    Some((users?, topics?))
}
