//! The user/topic affiliation graph.
//!
//! Nodes on each side are dense indices in arrival order. Each side keeps a
//! [`DegreeIndex`] whose slot masses equal the node degrees, so
//! degree-proportional draws and degree updates are both logarithmic.

mod fenwick;
pub(crate) mod seed;

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use fenwick::DegreeIndex;
pub use seed::new_seed_graph;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    User,
    Topic,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::User => Side::Topic,
            Side::Topic => Side::User,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeRef {
    pub side: Side,
    pub index: usize,
}

impl NodeRef {
    pub fn user(index: usize) -> Self {
        NodeRef {
            side: Side::User,
            index,
        }
    }

    pub fn topic(index: usize) -> Self {
        NodeRef {
            side: Side::Topic,
            index,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct SideData {
    adjacency: Vec<Vec<u32>>,
    index: DegreeIndex,
}

impl SideData {
    fn push_node(&mut self) -> usize {
        self.adjacency.push(Vec::new());
        self.index.push(0);
        self.adjacency.len() - 1
    }
}

#[derive(Debug, Clone, Default)]
pub struct BipartiteGraph {
    users: SideData,
    topics: SideData,
    edges: HashSet<(u32, u32)>,
    log: Vec<(u32, u32)>,
}

impl PartialEq for BipartiteGraph {
    /// Structural equality: same node counts and identical adjacency lists,
    /// including their order.
    fn eq(&self, other: &Self) -> bool {
        self.users.adjacency == other.users.adjacency
            && self.topics.adjacency == other.topics.adjacency
    }
}

impl Eq for BipartiteGraph {}

impl BipartiteGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// A graph with the given number of isolated nodes on each side.
    pub fn with_nodes(num_users: usize, num_topics: usize) -> Self {
        let mut g = Self::new();
        for _ in 0..num_users {
            g.add_node(Side::User);
        }
        for _ in 0..num_topics {
            g.add_node(Side::Topic);
        }
        g
    }

    fn side(&self, side: Side) -> &SideData {
        match side {
            Side::User => &self.users,
            Side::Topic => &self.topics,
        }
    }

    fn side_mut(&mut self, side: Side) -> &mut SideData {
        match side {
            Side::User => &mut self.users,
            Side::Topic => &mut self.topics,
        }
    }

    pub fn add_node(&mut self, side: Side) -> NodeRef {
        let index = self.side_mut(side).push_node();
        NodeRef { side, index }
    }

    pub fn node_count(&self, side: Side) -> usize {
        self.side(side).adjacency.len()
    }

    pub fn num_users(&self) -> usize {
        self.users.adjacency.len()
    }

    pub fn num_topics(&self) -> usize {
        self.topics.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sum of degrees on one side. Equals `edge_count` for either side.
    pub fn total_degree(&self, side: Side) -> u64 {
        self.side(side).index.total()
    }

    pub fn check_node(&self, node: NodeRef) -> Result<()> {
        let len = self.node_count(node.side);
        if node.index < len {
            Ok(())
        } else {
            Err(Error::Index {
                side: node.side,
                index: node.index,
                len,
            })
        }
    }

    pub fn degree(&self, node: NodeRef) -> usize {
        self.side(node.side).adjacency[node.index].len()
    }

    /// Mass currently stored for `node` in the sampling index.
    pub fn sampling_mass(&self, node: NodeRef) -> u64 {
        self.side(node.side).index.get(node.index)
    }

    /// Opposite-side neighbors in insertion order.
    pub fn neighbors(&self, node: NodeRef) -> &[u32] {
        &self.side(node.side).adjacency[node.index]
    }

    pub fn has_edge(&self, user: usize, topic: usize) -> bool {
        self.edges.contains(&(user as u32, topic as u32))
    }

    /// Connect `user` and `topic`. Returns `false` without touching the graph
    /// when the edge already exists.
    pub fn add_edge(&mut self, user: NodeRef, topic: NodeRef) -> Result<bool> {
        if user.side != Side::User || topic.side != Side::Topic {
            return Err(Error::Parameter(format!(
                "add_edge expects (user, topic), got ({:?}, {:?})",
                user.side, topic.side
            )));
        }
        self.check_node(user)?;
        self.check_node(topic)?;
        Ok(self.insert_edge(user.index, topic.index))
    }

    /// Same as [`add_edge`](Self::add_edge) for endpoints given in either
    /// order, as long as they sit on opposite sides.
    pub fn connect(&mut self, a: NodeRef, b: NodeRef) -> Result<bool> {
        match (a.side, b.side) {
            (Side::User, Side::Topic) => self.add_edge(a, b),
            (Side::Topic, Side::User) => self.add_edge(b, a),
            _ => Err(Error::Parameter(format!(
                "cannot connect two {:?} nodes",
                a.side
            ))),
        }
    }

    pub(crate) fn insert_edge(&mut self, user: usize, topic: usize) -> bool {
        if !self.edges.insert((user as u32, topic as u32)) {
            return false;
        }
        self.log.push((user as u32, topic as u32));
        self.users.adjacency[user].push(topic as u32);
        self.users.index.add(user, 1);
        self.topics.adjacency[topic].push(user as u32);
        self.topics.index.add(topic, 1);
        true
    }

    /// Draw a node of `side` with probability proportional to its degree.
    ///
    /// Consumes exactly one `gen_range(0..total_degree)` call.
    pub fn sample_preferential<R: Rng + ?Sized>(&self, side: Side, rng: &mut R) -> Result<NodeRef> {
        let index = &self.side(side).index;
        if index.total() == 0 {
            return Err(Error::Sampling(side));
        }
        let target = rng.gen_range(0..index.total());
        let i = index.find(target).expect("target below total mass");
        Ok(NodeRef { side, index: i })
    }

    /// Uniformly random node on the opposite side of `node` that is not yet
    /// adjacent to it, or `None` when `node` is adjacent to every candidate.
    pub fn random_non_neighbor<R: Rng + ?Sized>(&self, node: NodeRef, rng: &mut R) -> Option<usize> {
        let other = node.side.opposite();
        let n = self.node_count(other);
        let deg = self.degree(node);
        if deg >= n {
            return None;
        }
        let adjacent = |c: usize| match node.side {
            Side::User => self.has_edge(node.index, c),
            Side::Topic => self.has_edge(c, node.index),
        };
        if deg * 2 <= n {
            loop {
                let c = rng.gen_range(0..n);
                if !adjacent(c) {
                    return Some(c);
                }
            }
        }
        let free: Vec<usize> = (0..n).filter(|&c| !adjacent(c)).collect();
        Some(free[rng.gen_range(0..free.len())])
    }

    /// All edges as `(user, topic)`, ordered by user then adjacency order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.users
            .adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, ts)| ts.iter().map(move |&t| (u, t as usize)))
    }

    /// All edges in insertion order. Re-inserting them in this order
    /// reproduces every adjacency list exactly.
    pub fn edges_in_order(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.log.iter().map(|&(u, t)| (u as usize, t as usize))
    }

    pub fn degrees(&self, side: Side) -> impl Iterator<Item = usize> + '_ {
        self.side(side).adjacency.iter().map(Vec::len)
    }

    pub fn min_degree(&self, side: Side) -> Option<usize> {
        self.degrees(side).min()
    }

    /// Brute-force consistency check of every structural invariant.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut seen = HashSet::new();
        for (u, ts) in self.users.adjacency.iter().enumerate() {
            for &t in ts {
                let t = t as usize;
                if t >= self.num_topics() {
                    return Err(format!("user {u} lists missing topic {t}"));
                }
                if !seen.insert((u, t)) {
                    return Err(format!("parallel edge ({u}, {t})"));
                }
                if !self.topics.adjacency[t].contains(&(u as u32)) {
                    return Err(format!("edge ({u}, {t}) missing from topic side"));
                }
            }
        }
        let topic_sum: usize = self.topics.adjacency.iter().map(Vec::len).sum();
        if topic_sum != seen.len() || self.edges.len() != seen.len() {
            return Err(format!(
                "degree sums disagree: users {}, topics {topic_sum}, edge set {}",
                seen.len(),
                self.edges.len()
            ));
        }
        for side in [Side::User, Side::Topic] {
            let data = self.side(side);
            if data.index.len() != data.adjacency.len() {
                return Err(format!("{side:?} index has wrong length"));
            }
            for (i, adj) in data.adjacency.iter().enumerate() {
                if data.index.get(i) != adj.len() as u64 || data.index.prefix(i + 1) - data.index.prefix(i) != adj.len() as u64 {
                    return Err(format!("{side:?} {i}: sampling mass differs from degree {}", adj.len()));
                }
            }
            if data.index.total() != seen.len() as u64 {
                return Err(format!("{side:?} index total differs from edge count"));
            }
        }
        Ok(())
    }

    /// Connected components as lists of flattened node ids
    /// (users `0..nu`, then topics).
    pub fn components(&self) -> Vec<Vec<usize>> {
        let nu = self.num_users();
        let total = nu + self.num_topics();
        let mut label = vec![usize::MAX; total];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for start in 0..total {
            if label[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            label[start] = id;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for w in self.flat_neighbors(v) {
                    if label[w] == usize::MAX {
                        label[w] = id;
                        members.push(w);
                        stack.push(w);
                    }
                }
            }
            out.push(members);
        }
        out
    }

    /// Neighbors in the flattened numbering (users `0..nu`, topics `nu..`).
    pub fn flat_neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let nu = self.num_users();
        let (list, offset) = if v < nu {
            (&self.users.adjacency[v], nu)
        } else {
            (&self.topics.adjacency[v - nu], 0)
        };
        list.iter().map(move |&w| w as usize + offset)
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn add_edge_dedups() {
        let mut g = BipartiteGraph::with_nodes(1, 1);
        assert!(g.add_edge(NodeRef::user(0), NodeRef::topic(0)).unwrap());
        assert_eq!(g.edge_count(), 1);
        assert!(!g.add_edge(NodeRef::user(0), NodeRef::topic(0)).unwrap());
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.degree(NodeRef::user(0)), 1);
        g.check_invariants().unwrap();
    }

    #[test]
    fn add_edge_rejects_bad_refs() {
        let mut g = BipartiteGraph::with_nodes(2, 2);
        assert!(matches!(
            g.add_edge(NodeRef::user(2), NodeRef::topic(0)),
            Err(Error::Index { side: Side::User, index: 2, len: 2 })
        ));
        assert!(g.add_edge(NodeRef::topic(0), NodeRef::user(0)).is_err());
        assert!(g.connect(NodeRef::topic(1), NodeRef::user(1)).unwrap());
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn random_adds_keep_masses_exact() {
        let mut rng = stream(3, &[]);
        let mut g = BipartiteGraph::with_nodes(300, 200);
        for _ in 0..100_000 {
            let u = rng.gen_range(0..300);
            let t = rng.gen_range(0..200);
            g.add_edge(NodeRef::user(u), NodeRef::topic(t)).unwrap();
        }
        // brute-force recount from adjacency
        let mut du = vec![0u64; 300];
        let mut dt = vec![0u64; 200];
        for (u, t) in g.edges() {
            du[u] += 1;
            dt[t] += 1;
        }
        for (u, &d) in du.iter().enumerate() {
            assert_eq!(g.sampling_mass(NodeRef::user(u)), d);
        }
        for (t, &d) in dt.iter().enumerate() {
            assert_eq!(g.sampling_mass(NodeRef::topic(t)), d);
        }
        g.check_invariants().unwrap();
    }

    #[test]
    fn sampling_needs_mass() {
        let g = BipartiteGraph::with_nodes(3, 0);
        let mut rng = stream(1, &[]);
        assert!(matches!(g.sample_preferential(Side::User, &mut rng), Err(Error::Sampling(Side::User))));
        let g = BipartiteGraph::new();
        assert!(g.sample_preferential(Side::Topic, &mut rng).is_err());
    }

    #[test]
    fn single_positive_node_always_drawn() {
        let mut g = BipartiteGraph::with_nodes(4, 1);
        g.add_edge(NodeRef::user(2), NodeRef::topic(0)).unwrap();
        let mut rng = stream(5, &[]);
        for _ in 0..200 {
            assert_eq!(g.sample_preferential(Side::User, &mut rng).unwrap(), NodeRef::user(2));
        }
    }

    #[test]
    fn sampling_follows_degrees() {
        // degrees {a: 1, b: 3}
        let mut g = BipartiteGraph::with_nodes(2, 3);
        g.add_edge(NodeRef::user(0), NodeRef::topic(0)).unwrap();
        for t in 0..3 {
            g.add_edge(NodeRef::user(1), NodeRef::topic(t)).unwrap();
        }
        let mut rng = stream(11, &[]);
        let n = 200_000;
        let hits = (0..n)
            .filter(|_| g.sample_preferential(Side::User, &mut rng).unwrap().index == 1)
            .count();
        let p = hits as f64 / n as f64;
        let sigma = (0.75f64 * 0.25 / n as f64).sqrt();
        assert!((p - 0.75).abs() < 4.0 * sigma, "P(b) = {p}");
    }

    #[test]
    fn random_non_neighbor_exhausts() {
        let mut g = BipartiteGraph::with_nodes(1, 3);
        let mut rng = stream(2, &[]);
        for _ in 0..3 {
            let t = g.random_non_neighbor(NodeRef::user(0), &mut rng).unwrap();
            assert!(g.add_edge(NodeRef::user(0), NodeRef::topic(t)).unwrap());
        }
        assert_eq!(g.random_non_neighbor(NodeRef::user(0), &mut rng), None);
    }

    #[test]
    fn components_of_two_stars() {
        let mut g = BipartiteGraph::with_nodes(3, 2);
        g.add_edge(NodeRef::user(0), NodeRef::topic(0)).unwrap();
        g.add_edge(NodeRef::user(1), NodeRef::topic(0)).unwrap();
        g.add_edge(NodeRef::user(2), NodeRef::topic(1)).unwrap();
        let mut sizes: Vec<_> = g.components().iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, vec![2, 3]);
        assert!(!g.is_connected());
    }
}
