//! A plain re-implementation of the growth step, driven by the same random
//! streams, checked step by step against the library.

use std::collections::HashSet;

use rand::Rng;
use searchnet::evolution::{evolve_step, StepStreams};
use searchnet::rng::{self, SimRng};
use searchnet::{new_seed_graph, BipartiteGraph, EvolutionConfig, NodeRef, SearchPolicy, Side};

struct Reference {
    // [users, topics]
    adj: [Vec<Vec<usize>>; 2],
    edges: HashSet<(usize, usize)>,
}

fn slot(side: Side) -> usize {
    match side {
        Side::User => 0,
        Side::Topic => 1,
    }
}

impl Reference {
    fn from_graph(g: &BipartiteGraph) -> Self {
        let mut r = Reference {
            adj: [vec![Vec::new(); g.num_users()], vec![Vec::new(); g.num_topics()]],
            edges: HashSet::new(),
        };
        for (u, t) in g.edges_in_order() {
            r.link(u, t);
        }
        r
    }

    fn link(&mut self, u: usize, t: usize) {
        assert!(self.edges.insert((u, t)), "duplicate edge ({u}, {t})");
        self.adj[0][u].push(t);
        self.adj[1][t].push(u);
    }

    fn connect(&mut self, side: Side, node: usize, other: usize) {
        match side {
            Side::User => self.link(node, other),
            Side::Topic => self.link(other, node),
        }
    }

    fn adjacent(&self, side: Side, node: usize, other: usize) -> bool {
        match side {
            Side::User => self.edges.contains(&(node, other)),
            Side::Topic => self.edges.contains(&(other, node)),
        }
    }

    /// Degree-proportional draw by a linear walk over the cumulative degrees.
    fn preferential(&self, side: Side, rng: &mut SimRng) -> usize {
        let degs = &self.adj[slot(side)];
        let total: u64 = degs.iter().map(|a| a.len() as u64).sum();
        let mut target = rng.gen_range(0..total);
        for (i, a) in degs.iter().enumerate() {
            let d = a.len() as u64;
            if target < d {
                return i;
            }
            target -= d;
        }
        unreachable!("target below total")
    }

    fn weighted(weights: &[f64], rng: &mut SimRng) -> Option<usize> {
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

    fn degree_ranked_pick(&self, side: Side, node: usize, rng: &mut SimRng) -> Option<usize> {
        let other = side.opposite();
        let total: usize = self.adj[slot(other)].iter().map(Vec::len).sum();
        if total == 0 {
            return None;
        }
        for _ in 0..64 {
            let c = self.preferential(other, rng);
            if !self.adjacent(side, node, c) {
                return Some(c);
            }
        }
        let w: Vec<f64> = self.adj[slot(other)]
            .iter()
            .enumerate()
            .map(|(c, a)| if self.adjacent(side, node, c) { 0.0 } else { a.len() as f64 })
            .collect();
        Self::weighted(&w, rng)
    }

    fn uniform_pick(&self, side: Side, node: usize, rng: &mut SimRng) -> Option<usize> {
        let n = self.adj[slot(side.opposite())].len();
        let deg = self.adj[slot(side)][node].len();
        if deg >= n {
            return None;
        }
        if deg * 2 <= n {
            loop {
                let c = rng.gen_range(0..n);
                if !self.adjacent(side, node, c) {
                    return Some(c);
                }
            }
        }
        let free: Vec<usize> = (0..n).filter(|&c| !self.adjacent(side, node, c)).collect();
        Some(free[rng.gen_range(0..free.len())])
    }

    /// Returns (side, new index, prototype, copied, fired, searched).
    fn step(&mut self, cfg: &EvolutionConfig, time: u64) -> (Side, usize, usize, Vec<usize>, bool, Vec<usize>) {
        let mut s = StepStreams::for_step(cfg.seed, time);
        let side = if s.main.gen_bool(cfg.beta) { Side::User } else { Side::Topic };
        let proto = self.preferential(side, &mut s.main);
        let mut pool = self.adj[slot(side)][proto].clone();
        let k = cfg.copies_for(side).min(pool.len());
        for j in 0..k {
            let r = s.main.gen_range(j..pool.len());
            pool.swap(j, r);
        }
        pool.truncate(k);
        let fired = s.main.gen_bool(cfg.p_search);

        self.adj[slot(side)].push(Vec::new());
        let node = self.adj[slot(side)].len() - 1;
        for &o in &pool {
            self.connect(side, node, o);
        }
        let mut searched = Vec::new();
        if fired {
            for _ in 0..cfg.search_edges_for(side) {
                let pick = match cfg.search_policy {
                    SearchPolicy::UniformRandom => self.uniform_pick(side, node, &mut s.search),
                    SearchPolicy::DegreeRanked { exponent } if exponent == 1.0 => {
                        self.degree_ranked_pick(side, node, &mut s.search)
                    }
                    ref p => panic!("reference does not model {p:?}"),
                };
                let Some(c) = pick else { break };
                self.connect(side, node, c);
                searched.push(c);
            }
        }
        (side, node, proto, pool, fired, searched)
    }
}

fn compare(cfg: &EvolutionConfig, users: usize, topics: usize) -> usize {
    let mut rng = rng::stream(cfg.seed, &[77]);
    let mut graph = new_seed_graph(users, topics, cfg.c_u, cfg.c_t, true, &mut rng).unwrap();
    let mut reference = Reference::from_graph(&graph);
    let mut searched_total = 0;
    for t in 1..=cfg.steps {
        let report = evolve_step(&mut graph, cfg, t).unwrap();
        let (side, node, proto, copied, fired, searched) = reference.step(cfg, t);
        let other = side.opposite();
        let refs = |v: &[usize]| v.iter().map(|&i| NodeRef { side: other, index: i }).collect::<Vec<_>>();
        assert_eq!(report.arrival_side, side, "side at t={t}");
        assert_eq!(report.new_node, NodeRef { side, index: node }, "new node at t={t}");
        assert_eq!(report.prototype, NodeRef { side, index: proto }, "prototype at t={t}");
        assert_eq!(report.copied_edges, refs(&copied), "copies at t={t}");
        assert_eq!(report.search_fired, fired, "gate at t={t}");
        assert_eq!(report.search_edges, refs(&searched), "search at t={t}");
        searched_total += searched.len();
    }
    for side in [Side::User, Side::Topic] {
        assert_eq!(graph.node_count(side), reference.adj[slot(side)].len());
        for (i, a) in reference.adj[slot(side)].iter().enumerate() {
            let got: Vec<usize> = graph.neighbors(NodeRef { side, index: i }).iter().map(|&x| x as usize).collect();
            assert_eq!(&got, a, "{side:?} {i}");
        }
    }
    searched_total
}

#[test]
fn degree_ranked_run_matches_reference() {
    let cfg = EvolutionConfig { steps: 1000, seed: 42, ..Default::default() };
    assert!(compare(&cfg, 10, 10) > 0);
}

#[test]
fn uniform_run_matches_reference() {
    let cfg = EvolutionConfig {
        steps: 1000,
        seed: 43,
        p_search: 0.3,
        search_policy: SearchPolicy::UniformRandom,
        ..Default::default()
    };
    assert!(compare(&cfg, 10, 10) > 0);
}

#[test]
fn tiny_seed_exercises_exhausted_candidates() {
    // two topics only: early users are adjacent to every topic, so the
    // engine often finds nothing and the fallback paths run
    let cfg = EvolutionConfig {
        steps: 300,
        seed: 5,
        p_search: 0.6,
        c_u: 2,
        c_t: 2,
        ..Default::default()
    };
    compare(&cfg, 2, 2);
    compare(&EvolutionConfig { search_policy: SearchPolicy::UniformRandom, ..cfg }, 2, 2);
}

#[test]
fn unequal_copy_counts_match_reference() {
    let cfg = EvolutionConfig {
        steps: 600,
        seed: 8,
        beta: 0.3,
        c_u: 3,
        c_t: 1,
        search_edges_per_activation: Some(2),
        p_search: 0.4,
        ..Default::default()
    };
    compare(&cfg, 6, 6);
}
