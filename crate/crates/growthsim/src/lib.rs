//! Simulation of an invariant random spanning subgraph Γ of
//! `G = Δ × L × K10` (triangular lattice, lamplighter group, complete graph
//! on ten vertices) on finite windows, with ball-growth measurements from a
//! root showing that `ln |B(o, n)| / n` oscillates instead of converging.
//!
//! The pipeline is: sample critical site percolation on a triangular patch
//! ([`percolation`]), sample nested partitions of the lamplighter group
//! ([`lamplighter`]), assemble Γ lazily from cans ([`gamma`]), and measure
//! growth and exit events ([`growth`]). [`runner`] ties a configuration to
//! reproducible reports.

pub mod error;
pub mod gamma;
pub mod growth;
pub mod keyed;
pub mod lamplighter;
pub mod percolation;
pub mod runner;

pub use error::{Error, Result};
pub use gamma::{can_of, g_neighbors, Can, CanEdge, GVertex, GammaOracle, Mode, Realization, VertexId};
pub use lamplighter::{LampElement, PClassId, PartitionSystem};
pub use percolation::{Cluster, ClusterTree, PercField, Percolation, Site, TriPatch};
