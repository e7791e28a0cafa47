use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::graph::{BipartiteGraph, Side};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeHistogram {
    pub side: Side,
    /// degree -> number of nodes with that degree
    pub counts: BTreeMap<usize, usize>,
    pub total_nodes: usize,
    pub recorded_at: u64,
}

impl DegreeHistogram {
    pub fn from_degrees(side: Side, degrees: impl IntoIterator<Item = usize>, d_floor: usize) -> Self {
        let mut counts = BTreeMap::new();
        let mut total = 0;
        for d in degrees.into_iter().filter(|&d| d >= d_floor) {
            *counts.entry(d).or_insert(0) += 1;
            total += 1;
        }
        DegreeHistogram {
            side,
            counts,
            total_nodes: total,
            recorded_at: 0,
        }
    }

    pub fn at(mut self, step: u64) -> Self {
        self.recorded_at = step;
        self
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// `degree,count` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "degree,count")?;
        for (d, c) in &self.counts {
            writeln!(out, "{d},{c}")?;
        }
        Ok(())
    }
}

/// Count `side` nodes by degree, keeping degrees `>= d_floor`.
pub fn degree_histogram(graph: &BipartiteGraph, side: Side, d_floor: usize) -> DegreeHistogram {
    DegreeHistogram::from_degrees(side, graph.degrees(side), d_floor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeRef;

    #[test]
    fn star_histograms() {
        let mut g = BipartiteGraph::with_nodes(5, 1);
        for u in 0..5 {
            g.add_edge(NodeRef::user(u), NodeRef::topic(0)).unwrap();
        }
        let users = degree_histogram(&g, Side::User, 1);
        assert_eq!(users.counts, BTreeMap::from([(1, 5)]));
        assert_eq!(users.total_nodes, 5);
        let topics = degree_histogram(&g, Side::Topic, 1);
        assert_eq!(topics.counts, BTreeMap::from([(5, 1)]));
    }

    #[test]
    fn empty_side() {
        let g = BipartiteGraph::with_nodes(0, 3);
        let h = degree_histogram(&g, Side::User, 1);
        assert!(h.is_empty());
        assert_eq!(h.total_nodes, 0);
    }

    #[test]
    fn floor_drops_small_degrees() {
        let h = DegreeHistogram::from_degrees(Side::User, [0, 1, 11, 12, 11, 40], 11);
        assert_eq!(h.counts, BTreeMap::from([(11, 2), (12, 1), (40, 1)]));
        assert_eq!(h.total_nodes, 4);
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "degree,count\n11,2\n12,1\n40,1\n");
    }
}
