use std::collections::{HashMap, HashSet};
use std::io::Cursor;

use proptest::prelude::*;
use searchnet::ingest::{
    bipartize, load_edge_list, read_graph, seed_from_dataset, split_assignment, write_edge_list, write_graph,
    BipartizeStrategy, LoadOptions, RawGraph,
};
use searchnet::{NodeRef, Side};

const FIXTURE: &str = include_str!("fixtures/gnutella_like.txt");

struct Recount {
    nodes: usize,
    edges: HashSet<(i64, i64)>,
    self_loops: usize,
    duplicates: usize,
}

/// Counts taken straight from the text, without the loader.
fn recount(text: &str, directed: bool) -> Recount {
    let mut seen_nodes = HashSet::new();
    let mut edges = HashSet::new();
    let (mut self_loops, mut duplicates) = (0, 0);
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace().map(|t| t.parse::<i64>().unwrap());
        let (a, b) = (it.next().unwrap(), it.next().unwrap());
        seen_nodes.insert(a);
        seen_nodes.insert(b);
        if a == b {
            self_loops += 1;
            continue;
        }
        let key = if directed { (a, b) } else { (a.min(b), a.max(b)) };
        if !edges.insert(key) {
            duplicates += 1;
        }
    }
    Recount { nodes: seen_nodes.len(), edges, self_loops, duplicates }
}

fn load(directed: bool) -> RawGraph {
    load_edge_list(Cursor::new(FIXTURE), "gnutella_like.txt", LoadOptions { directed }).unwrap()
}

#[test]
fn loader_counts_match_recount() {
    for directed in [false, true] {
        let raw = load(directed);
        let expect = recount(FIXTURE, directed);
        assert_eq!(raw.node_count(), expect.nodes, "directed={directed}");
        assert_eq!(raw.edge_count(), expect.edges.len());
        assert_eq!(raw.self_loops_dropped, expect.self_loops);
        assert_eq!(raw.duplicates_dropped, expect.duplicates);
        assert!(expect.self_loops > 0 && expect.duplicates > 0, "fixture exercises both drops");
        let got: HashSet<(i64, i64)> = raw
            .id_edges()
            .map(|(a, b)| if directed { (a, b) } else { (a.min(b), a.max(b)) })
            .collect();
        assert_eq!(got, expect.edges);
    }
}

#[test]
fn double_cover_seed_meets_minimum_degrees() {
    let raw = load(false);
    let seeded = seed_from_dataset(&raw, &BipartizeStrategy::DoubleCover, 2, 2, 3).unwrap();
    let g = &seeded.bipartized.graph;
    g.check_invariants().unwrap();
    assert_eq!(g.num_users(), raw.node_count());
    assert_eq!(g.num_topics(), raw.node_count());
    assert!(g.min_degree(Side::User).unwrap() >= 2);
    assert!(g.min_degree(Side::Topic).unwrap() >= 2);
    assert_eq!(g.edge_count(), 2 * raw.edge_count() + seeded.topped_up);
    // every original undirected edge appears in both orientations
    let index: HashMap<i64, usize> = raw.ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    for (a, b) in raw.id_edges() {
        assert!(g.has_edge(index[&a], index[&b]) && g.has_edge(index[&b], index[&a]));
    }
}

#[test]
fn random_split_drops_exactly_same_side_edges() {
    // 1000 nodes on a ring plus chords
    let mut text = String::new();
    for v in 0..1000 {
        text.push_str(&format!("{v} {}\n{v} {}\n", (v + 1) % 1000, (v * 37 + 11) % 1000));
    }
    let raw = load_edge_list(Cursor::new(text), "ring", LoadOptions::default()).unwrap();
    assert_eq!(raw.node_count(), 1000);
    let strategy = BipartizeStrategy::RandomSplit { split_fraction: 0.5, seed: 7 };
    let b = bipartize(&raw, &strategy).unwrap();

    let sides = split_assignment(1000, 0.5, 7);
    let same_side = raw.edges.iter().filter(|&&(a, c)| sides[a as usize] == sides[c as usize]).count();
    assert_eq!(b.dropped_edges, same_side);
    assert_eq!(b.graph.edge_count() + same_side, raw.edge_count());
    let users = sides.iter().filter(|&&s| s == Side::User).count();
    assert_eq!(b.graph.num_users(), users);
    assert_eq!(b.user_ids.len() + b.topic_ids.len(), 1000);
    // kept edges really join a user id to a topic id
    let user_set: HashSet<i64> = b.user_ids.iter().copied().collect();
    for (u, t) in b.graph.edges() {
        assert!(user_set.contains(&b.user_ids[u]));
        assert!(!user_set.contains(&b.topic_ids[t]));
    }
}

#[test]
fn native_graph_format_round_trips() {
    let raw = load(false);
    let g = seed_from_dataset(&raw, &BipartizeStrategy::DoubleCover, 2, 2, 1).unwrap().bipartized.graph;
    let mut buf = Vec::new();
    write_graph(&g, &mut buf).unwrap();
    let back = read_graph(Cursor::new(&buf), "mem").unwrap();
    assert_eq!(back, g);
    let mut again = Vec::new();
    write_graph(&back, &mut again).unwrap();
    assert_eq!(buf, again);
}

fn edge_list() -> impl Strategy<Value = Vec<(i64, i64)>> {
    prop::collection::vec((-50i64..50, -50i64..50), 1..80)
}

proptest! {
    #[test]
    fn edge_list_round_trips(edges in edge_list(), directed in any::<bool>()) {
        let text: String = edges.iter().map(|(a, b)| format!("{a} {b}\n")).collect();
        let Ok(raw) = load_edge_list(Cursor::new(&text), "p", LoadOptions { directed }) else {
            // only self-loops
            prop_assert!(edges.iter().all(|(a, b)| a == b));
            return Ok(());
        };
        let mut out = Vec::new();
        write_edge_list(&raw, &mut out).unwrap();
        let back = load_edge_list(Cursor::new(&out), "p", LoadOptions { directed }).unwrap();
        prop_assert_eq!(&back.ids, &raw.ids);
        prop_assert_eq!(&back.edges, &raw.edges);
        prop_assert_eq!(back.self_loops_dropped + back.duplicates_dropped, 0);
    }

    #[test]
    fn bipartize_never_joins_one_side(edges in edge_list(), fraction in 0.05f64..0.95, seed in any::<u64>()) {
        let text: String = edges.iter().map(|(a, b)| format!("{a} {b}\n")).collect();
        let Ok(raw) = load_edge_list(Cursor::new(&text), "p", LoadOptions::default()) else { return Ok(()) };
        for strategy in [
            BipartizeStrategy::DoubleCover,
            BipartizeStrategy::RandomSplit { split_fraction: fraction, seed },
        ] {
            let Ok(b) = bipartize(&raw, &strategy) else { continue };
            let g = &b.graph;
            prop_assert!(g.check_invariants().is_ok());
            for u in 0..g.num_users() {
                for &t in g.neighbors(NodeRef::user(u)) {
                    prop_assert!(g.neighbors(NodeRef::topic(t as usize)).contains(&(u as u32)));
                }
            }
            prop_assert_eq!(g.edge_count() + b.dropped_edges, match strategy {
                BipartizeStrategy::DoubleCover => 2 * raw.edge_count(),
                _ => raw.edge_count(),
            });
        }
    }
}
