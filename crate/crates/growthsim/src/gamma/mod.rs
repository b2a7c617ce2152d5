//! The ambient graph `G = (Δ □ L)[K10]`, its partition into cans, and the
//! random spanning subgraph Γ assembled can by can.
//!
//! Two vertices `(x, y, k)` and `(x', y', k')` of `G` are adjacent when they
//! share a base vertex and differ in fibre, or when their base vertices are
//! one Cartesian step apart in `Δ □ L` (any fibres).

mod layout;
mod oracle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keyed::fnv1a64;
use crate::lamplighter::{lamplighter_neighbors, p_class_of, ClassShape, LampElement, PClassId, PartitionSystem};
use crate::percolation::{Percolation, Site, TriPatch};

pub use layout::{hamiltonian_path, inter_can_edge, intra_can_structure, CanLayout, ClusterGeometry};
pub use oracle::{GammaOracle, VertexId};

/// Number of fibre copies of every base vertex.
pub const FIBERS: u8 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GVertex {
    pub site: Site,
    pub lamp: LampElement,
    /// In `1..=10`.
    pub fiber: u8,
}

impl GVertex {
    pub fn new(site: Site, lamp: LampElement, fiber: u8) -> Self {
        assert!((1..=FIBERS).contains(&fiber), "fiber out of range");
        Self { site, lamp, fiber }
    }
}

/// Neighbours of `v` in `G` restricted to the patch.
pub fn g_neighbors(v: &GVertex, patch: &TriPatch) -> Vec<GVertex> {
    let mut out = Vec::with_capacity(99);
    for k in (1..=FIBERS).filter(|&k| k != v.fiber) {
        out.push(GVertex::new(v.site, v.lamp.clone(), k));
    }
    for x in patch.neighbors(v.site) {
        for k in 1..=FIBERS {
            out.push(GVertex::new(x, v.lamp.clone(), k));
        }
    }
    for y in lamplighter_neighbors(&v.lamp) {
        for k in 1..=FIBERS {
            out.push(GVertex::new(v.site, y.clone(), k));
        }
    }
    out
}

/// Whether `u` and `v` are adjacent in `G`.
pub fn g_adjacent(u: &GVertex, v: &GVertex) -> bool {
    let same_site = u.site == v.site;
    let same_lamp = u.lamp == v.lamp;
    if same_site && same_lamp {
        return u.fiber != v.fiber;
    }
    let site_step = u.site.distance(v.site) == 1;
    let lamp_step = lamplighter_neighbors(&u.lamp).contains(&v.lamp);
    (site_step && same_lamp) || (same_site && lamp_step)
}

/// Internal structure Γ puts on type-1 cans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Every induced edge of the can.
    FullInterior,
    /// A breadth-first spanning tree of the can, geodesic from its root.
    SpanningTree,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full_interior" => Ok(Mode::FullInterior),
            "spanning_tree" => Ok(Mode::SpanningTree),
            other => Err(Error::ConfigInvalid(format!("unknown mode `{other}`"))),
        }
    }
}

/// One block `δ × σ × K10` of the vertex partition of `G`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Can {
    /// Index of δ in the clustering.
    pub cluster: usize,
    /// Canonical id of δ (row-major index of its smallest site).
    pub cluster_id: usize,
    /// Partition level of the class: the cluster's height, capped at the
    /// number of partition levels.
    pub level: usize,
    /// Height of δ in the cluster tree.
    pub height: usize,
    pub class: PClassId,
    /// State of δ: 0 (closed) or 1 (open).
    pub can_type: u8,
    pub cluster_size: usize,
    pub class_size: usize,
    pub size: usize,
}

impl Can {
    /// Canonical id `<cluster-id>.<level>.<block-index>.<fnv of external lamps>`,
    /// used in randomness tags.
    pub fn id(&self) -> String {
        can_id(self.cluster_id, self.level, self.class.block_index, &self.class.external_lamps)
    }
}

pub(crate) fn can_id(cluster_id: usize, level: usize, block_index: i64, external: &[i64]) -> String {
    let joined = external.iter().map(i64::to_string).collect::<Vec<_>>().join(",");
    format!("{cluster_id}.{level}.{block_index}.{:016x}", fnv1a64(&joined))
}

/// The Γ-edge joining a can to the can of its surrounding cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanEdge {
    pub child: Can,
    pub parent_can: Can,
    /// `(vertex in child, vertex in parent_can)`.
    pub edge: (GVertex, GVertex),
}

/// A sampled percolation configuration paired with sampled partitions.
///
/// Cans exist for every cluster that avoids the patch boundary; boundary
/// clusters form the outer region. A cluster taller than the number of
/// partition levels is *capped*: its cans use the coarsest partition, and
/// measurements treat them like the outer region.
#[derive(Debug, Clone)]
pub struct Realization {
    pub percolation: Percolation,
    pub partitions: PartitionSystem,
}

impl Realization {
    pub fn new(percolation: Percolation, partitions: PartitionSystem) -> Self {
        Self { percolation, partitions }
    }

    pub fn patch(&self) -> TriPatch {
        self.percolation.patch()
    }

    pub fn is_outer_cluster(&self, cluster: usize) -> bool {
        self.percolation.cluster(cluster).touches_boundary
    }

    pub fn is_outer_site(&self, s: Site) -> bool {
        self.is_outer_cluster(self.percolation.cluster_index(s))
    }

    pub fn height(&self, cluster: usize) -> usize {
        self.percolation.tree.level[cluster] as usize
    }

    /// Partition level used for the cans of `cluster`.
    pub fn class_level(&self, cluster: usize) -> usize {
        self.height(cluster).min(self.partitions.levels())
    }

    pub fn is_capped_cluster(&self, cluster: usize) -> bool {
        !self.is_outer_cluster(cluster) && self.height(cluster) > self.partitions.levels()
    }

    /// Outer or capped: where ball growth stops being measured.
    pub fn is_frontier_site(&self, s: Site) -> bool {
        let c = self.percolation.cluster_index(s);
        self.is_outer_cluster(c) || self.is_capped_cluster(c)
    }

    /// Surrounding cluster of `cluster`, if it carries cans.
    pub fn parent_cluster(&self, cluster: usize) -> Option<usize> {
        self.percolation.tree.parent[cluster].filter(|&p| !self.is_outer_cluster(p))
    }

    pub(crate) fn make_can(&self, cluster: usize, class: PClassId) -> Can {
        let c = self.percolation.cluster(cluster);
        let class_size = ClassShape::new(&class, &self.partitions).size();
        Can {
            cluster,
            cluster_id: c.id,
            level: class.level,
            height: self.height(cluster),
            can_type: c.state,
            cluster_size: c.len(),
            class_size,
            size: c.len() * class_size * FIBERS as usize,
            class,
        }
    }

    /// The can of the parent cluster containing `can`'s class, if any.
    pub fn parent_can(&self, can: &Can) -> Option<Can> {
        let parent = self.parent_cluster(can.cluster)?;
        let level = self.class_level(parent);
        let member = ClassShape::new(&can.class, &self.partitions).member(0);
        Some(self.make_can(parent, p_class_of(&member, level, &self.partitions)))
    }
}

pub fn can_of(v: &GVertex, real: &Realization) -> Result<Can> {
    let cluster = real.percolation.cluster_index(v.site);
    if real.is_outer_cluster(cluster) {
        return Err(Error::OuterRegion { site: v.site });
    }
    let level = real.class_level(cluster);
    Ok(real.make_can(cluster, p_class_of(&v.lamp, level, &real.partitions)))
}
