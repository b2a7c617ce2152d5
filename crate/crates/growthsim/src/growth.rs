//! Ball growth around a root of Γ, the chain of cans leading out of the
//! window, exit events at the edges between consecutive cans, and the
//! checks evaluated on them.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::{Can, CanEdge, GVertex, GammaOracle, Realization, VertexId};
use crate::lamplighter::ClassShape;

/// One can of the chain from the root outwards.
#[derive(Debug, Clone)]
pub struct ChainLink {
    pub can: Can,
    pub slot: u32,
    /// Edge to the next can of the chain; `None` for the last can.
    pub up_edge: Option<CanEdge>,
    up_ids: Option<(VertexId, VertexId)>,
}

impl ChainLink {
    pub fn up_ids(&self) -> Option<(VertexId, VertexId)> {
        self.up_ids
    }
}

#[derive(Debug, Clone)]
pub struct CanChain {
    pub root: VertexId,
    pub links: Vec<ChainLink>,
    /// Whether the root lies in a level-1 can.
    pub e0: bool,
}

impl CanChain {
    /// The first `len` links; the last kept link keeps its edge.
    pub fn prefix(&self, len: usize) -> CanChain {
        CanChain { root: self.root, links: self.links[..len.min(self.links.len())].to_vec(), e0: self.e0 }
    }
}

/// Follows parent cans from the root's can until a can whose surrounding
/// cluster lies in the outer region.
pub fn locate_can_chain(oracle: &mut GammaOracle, o: &GVertex) -> Result<CanChain> {
    let root = oracle.vertex_id(o)?;
    let mut links = Vec::new();
    let mut slot = root.can;
    loop {
        let can = oracle.can(slot).clone();
        let up_ids = oracle.up_edge(slot)?;
        let up_edge = up_ids.map(|(a, b)| CanEdge {
            child: can.clone(),
            parent_can: oracle.can(b.can).clone(),
            edge: (oracle.vertex(a), oracle.vertex(b)),
        });
        links.push(ChainLink { can, slot, up_edge, up_ids });
        match up_ids {
            Some((_, b)) => slot = b.can,
            None => break,
        }
    }
    let e0 = links[0].can.level == 1;
    Ok(CanChain { root, links, e0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthProfile {
    /// `|B(o, n)|` for `n = 0, 1, …`.
    pub volumes: Vec<u64>,
    /// `ln(volumes[n]) / n` for `n ≥ 1`; entry 0 is `n = 1`.
    pub rates: Vec<f64>,
    /// Radius at which the ball first met a capped can or a can whose parent
    /// lies in the outer region; later volumes are not recorded.
    pub truncated_at: Option<u32>,
}

impl GrowthProfile {
    pub fn from_volumes(volumes: Vec<u64>, truncated_at: Option<u32>) -> Self {
        let rates = volumes
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, &v)| (v as f64).ln() / n as f64)
            .collect();
        Self { volumes, rates, truncated_at }
    }

    pub fn radius(&self) -> u32 {
        self.volumes.len() as u32 - 1
    }
}

/// Result of a breadth-first search from the root.
#[derive(Debug, Clone)]
pub struct BallSearch {
    pub profile: GrowthProfile,
    dist: HashMap<VertexId, u32>,
}

impl BallSearch {
    pub fn distance(&self, v: VertexId) -> Option<u32> {
        self.dist.get(&v).copied()
    }

    /// Vertices of can `slot` within distance `radius`.
    pub fn count_in_can(&self, slot: u32, radius: u32) -> u64 {
        self.dist.iter().filter(|(v, &d)| v.can == slot && d <= radius).count() as u64
    }

    pub fn reached(&self) -> usize {
        self.dist.len()
    }
}

/// Breadth-first ball volumes around `o` up to radius `max_radius`.
///
/// Stops after the first layer that contains a vertex of a frontier can
/// (capped, or with its parent in the outer region) and records that radius.
pub fn bfs_profile(oracle: &mut GammaOracle, o: &GVertex, max_radius: u32) -> Result<BallSearch> {
    let root = oracle.vertex_id(o)?;
    let mut dist = HashMap::from([(root, 0u32)]);
    let mut volumes = vec![1u64];
    if oracle.is_frontier(root.can) {
        return Ok(BallSearch { profile: GrowthProfile::from_volumes(volumes, Some(0)), dist });
    }
    let mut frontier = vec![root];
    let mut truncated_at = None;
    let mut total = 1u64;
    for r in 1..=max_radius {
        let mut next = Vec::new();
        let mut hit_top = false;
        for &v in &frontier {
            for w in oracle.neighbors(v)? {
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(w) {
                    e.insert(r);
                    next.push(w);
                    hit_top |= oracle.is_frontier(w.can);
                }
            }
        }
        total += next.len() as u64;
        volumes.push(total);
        if hit_top {
            truncated_at = Some(r);
            break;
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(BallSearch { profile: GrowthProfile::from_volumes(volumes, truncated_at), dist })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitEvent {
    /// Position of the can in the chain, from 1.
    pub index: usize,
    pub level: usize,
    pub can_type: u8,
    pub can: Can,
    /// `(child end, parent end)` of the exit edge.
    pub edge: (GVertex, GVertex),
    /// Distance from the root to the child end.
    pub radius: u32,
    pub ball_volume: u64,
    /// `ln(ball_volume) / radius`; absent when the radius is 0.
    pub rate: Option<f64>,
    /// Total size of the cans on the finite side of the exit edge, by
    /// enumeration.
    pub finite_side_volume: u64,
    /// `interior_size(δ) · |σ| · 10`.
    pub identity_volume: u64,
    /// Vertices of the can inside the ball.
    pub covered: u64,
    pub covered_fraction: f64,
    /// `size^{1/3}`, reported next to `covered` for type-1 cans.
    pub cube_root_size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitScan {
    pub events: Vec<ExitEvent>,
    /// Events whose radius lies beyond the truncation radius.
    pub discarded: usize,
}

/// Total vertex count of the cans `C'` with `π_Δ(C') ⊆ int(δ)` and
/// `π_H(C') ⊆ π_H(can)`, enumerated can by can.
pub fn finite_side_volume(real: &Realization, can: &Can) -> u64 {
    let shape = ClassShape::new(&can.class, &real.partitions);
    let tree = &real.percolation.tree;
    let mut total = 0u64;
    for cluster in tree.subtree(can.cluster) {
        let level = real.class_level(cluster);
        for class in shape.subclasses(level, &real.partitions) {
            total += real.make_can(cluster, class).size as u64;
        }
    }
    total
}

pub fn exit_events(oracle: &mut GammaOracle, chain: &CanChain, search: &BallSearch) -> Result<ExitScan> {
    let mut events = Vec::new();
    let mut discarded = 0;
    let searched = search.profile.radius();
    for (i, link) in chain.links.iter().enumerate() {
        let (Some((u, v)), Some(edge)) = (link.up_ids, &link.up_edge) else {
            continue;
        };
        let index = i + 1;
        let Some(radius) = search.distance(u) else {
            if search.profile.truncated_at.is_some() {
                discarded += 1;
                continue;
            }
            return Err(Error::RadiusInsufficient { index, searched });
        };
        let parent_dist = search.distance(v);
        if parent_dist.is_none() && radius >= searched {
            return Err(Error::RadiusInsufficient { index, searched });
        }
        if parent_dist != Some(radius + 1) {
            return Err(Error::CutEdgeViolated { index, child: radius, parent: parent_dist });
        }
        let real = oracle.realization();
        let can = link.can.clone();
        let ball_volume = search.profile.volumes[radius as usize];
        let covered = search.count_in_can(link.slot, radius);
        let interior = real.percolation.tree.interior_size[can.cluster] as u64;
        events.push(ExitEvent {
            index,
            level: can.level,
            can_type: can.can_type,
            edge: edge.edge.clone(),
            radius,
            ball_volume,
            rate: (radius > 0).then(|| (ball_volume as f64).ln() / radius as f64),
            finite_side_volume: finite_side_volume(real, &can),
            identity_volume: interior * can.class_size as u64 * 10,
            covered,
            covered_fraction: covered as f64 / can.size as f64,
            cube_root_size: (can.size as f64).cbrt(),
            can,
        });
    }
    Ok(ExitScan { events, discarded })
}

/// One evaluation of the growth-constant condition
/// `ln c_ℓ ≥ 10 · b_{ℓ−1} · 2^{b_{ℓ−1}} · |int δ|` at the level ℓ of a chain can.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EChoiceCheck {
    pub index: usize,
    pub level: usize,
    pub ln_c: f64,
    pub threshold: f64,
    /// `ln_c − threshold`.
    pub margin: f64,
    pub holds: bool,
}

pub fn check_e_choice(chain: &CanChain, real: &Realization) -> Vec<EChoiceCheck> {
    let ps = &real.partitions;
    chain
        .links
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, link)| {
            let level = link.can.level;
            let ln_c = (ps.c_seq[level - 1] as f64).ln();
            let b = ps.block_len(level - 1) as f64;
            let interior = real.percolation.tree.interior_size[link.can.cluster] as f64;
            let threshold = 10.0 * b * b.exp2() * interior;
            EChoiceCheck { index: i + 1, level, ln_c, threshold, margin: ln_c - threshold, holds: ln_c >= threshold }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateAt {
    pub index: usize,
    pub radius: u32,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeRootCheck {
    pub index: usize,
    pub covered: u64,
    pub threshold: f64,
    pub reached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationSummary {
    pub min_type0_rate: Option<RateAt>,
    pub max_type1_rate: Option<RateAt>,
    pub covered_fractions: Vec<f64>,
    pub type0_events: usize,
    /// Fraction of type-0 events whose ball covers at least a quarter of the can.
    pub type0_quarter_covered: Option<f64>,
    pub coverage_target: f64,
    pub meets_coverage_target: Option<bool>,
    pub type1_cube_root: Vec<CubeRootCheck>,
    pub profile_min_rate: Option<f64>,
    pub profile_max_rate: Option<f64>,
}

pub const COVERAGE_TARGET: f64 = 0.5;

pub fn oscillation_summary(events: &[ExitEvent], profile: &GrowthProfile) -> Result<OscillationSummary> {
    if events.is_empty() {
        return Err(Error::NoEvents);
    }
    let rated = |t: u8| {
        events
            .iter()
            .filter(move |e| e.can_type == t)
            .filter_map(|e| e.rate.map(|rate| RateAt { index: e.index, radius: e.radius, rate }))
    };
    let min_type0_rate = rated(0).min_by(|a, b| a.rate.total_cmp(&b.rate));
    let max_type1_rate = rated(1).max_by(|a, b| a.rate.total_cmp(&b.rate));
    let type0: Vec<&ExitEvent> = events.iter().filter(|e| e.can_type == 0).collect();
    let type0_quarter_covered = (!type0.is_empty())
        .then(|| type0.iter().filter(|e| e.covered_fraction >= 0.25).count() as f64 / type0.len() as f64);
    let type1_cube_root = events
        .iter()
        .filter(|e| e.can_type == 1)
        .map(|e| CubeRootCheck {
            index: e.index,
            covered: e.covered,
            threshold: e.cube_root_size,
            reached: e.covered as f64 >= e.cube_root_size,
        })
        .collect();
    let finite = profile.rates.iter().copied();
    Ok(OscillationSummary {
        min_type0_rate,
        max_type1_rate,
        covered_fractions: events.iter().map(|e| e.covered_fraction).collect(),
        type0_events: type0.len(),
        type0_quarter_covered,
        coverage_target: COVERAGE_TARGET,
        meets_coverage_target: type0_quarter_covered.map(|f| f >= COVERAGE_TARGET),
        type1_cube_root,
        profile_min_rate: finite.clone().reduce(f64::min),
        profile_max_rate: finite.reduce(f64::max),
    })
}
