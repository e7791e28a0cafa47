pub mod error;
pub mod evolution;
pub mod graph;
pub mod ingest;
pub mod metrics;
pub mod rng;
pub mod sir;

#[cfg(feature = "harness")]
pub mod harness;

pub use error::{Error, Result};
pub use evolution::{evolve_step, run_evolution, EvolutionConfig, SearchPolicy, StepReport};
pub use graph::{new_seed_graph, BipartiteGraph, NodeRef, Side};
