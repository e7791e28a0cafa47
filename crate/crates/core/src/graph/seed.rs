use rand::Rng;

use super::{BipartiteGraph, NodeRef, Side};
use crate::error::{Error, Result};

/// Build a time-zero graph in which every user has degree at least `c_u`
/// and every topic at least `c_t`.
///
/// With `connected` set, the nodes are first threaded onto one alternating
/// walk `u0 t0 u1 t1 ...` (indices wrap on the smaller side) so the graph is
/// a single component. Nodes still below their minimum then receive random
/// non-duplicate edges, users first, and random edges are added until there
/// are at least `c_u * c_t` of them.
pub fn new_seed_graph<R: Rng + ?Sized>(
    num_users: usize,
    num_topics: usize,
    c_u: usize,
    c_t: usize,
    connected: bool,
    rng: &mut R,
) -> Result<BipartiteGraph> {
    if num_users == 0 || num_topics == 0 {
        return Err(Error::Parameter(format!(
            "seed graph needs at least one node per side, got {num_users} users and {num_topics} topics"
        )));
    }
    if c_u > num_topics {
        return Err(Error::Parameter(format!(
            "c_u = {c_u} exceeds the number of topics ({num_topics})"
        )));
    }
    if c_t > num_users {
        return Err(Error::Parameter(format!(
            "c_t = {c_t} exceeds the number of users ({num_users})"
        )));
    }

    let mut g = BipartiteGraph::with_nodes(num_users, num_topics);
    if connected {
        for i in 0..num_users.max(num_topics) {
            let t = i % num_topics;
            g.insert_edge(i % num_users, t);
            g.insert_edge((i + 1) % num_users, t);
        }
    }
    top_up(&mut g, Side::User, c_u, rng);
    top_up(&mut g, Side::Topic, c_t, rng);

    let target = c_u * c_t;
    while g.edge_count() < target {
        let u = rng.gen_range(0..num_users);
        if let Some(t) = g.random_non_neighbor(NodeRef::user(u), rng) {
            g.insert_edge(u, t);
        }
    }
    Ok(g)
}

/// Raise every `side` node below `min_degree` with uniformly random new edges.
/// Returns the number of edges added.
pub(crate) fn top_up<R: Rng + ?Sized>(g: &mut BipartiteGraph, side: Side, min_degree: usize, rng: &mut R) -> usize {
    let mut added = 0;
    for i in 0..g.node_count(side) {
        let node = NodeRef { side, index: i };
        while g.degree(node) < min_degree {
            let Some(other) = g.random_non_neighbor(node, rng) else {
                break;
            };
            let (u, t) = match side {
                Side::User => (i, other),
                Side::Topic => (other, i),
            };
            g.insert_edge(u, t);
            added += 1;
        }
    }
    added
}
