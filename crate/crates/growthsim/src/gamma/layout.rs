//! Indexed layout of a single can and the structures Γ places on it.
//!
//! Within a can `δ × σ × K10` the base vertex `(x, y)` has index
//! `pos(x) · |σ| + member(y)`, where `pos` is the row-major rank of `x` in δ and
//! `member` is the class enumeration order; vertex `(x, y, k)` has local index
//! `base · 10 + (k − 1)`. Ascending local index is the canonical vertex order.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::keyed::KeyedRng;
use crate::lamplighter::ClassShape;
use crate::percolation::{Cluster, Site, TriPatch};

use super::{Can, GVertex, Mode, Realization, FIBERS};

const FIBER_COUNT: usize = FIBERS as usize;

/// Sites of a cluster and their in-cluster triangular adjacency by position.
#[derive(Debug, Clone)]
pub struct ClusterGeometry {
    pub sites: Vec<Site>,
    pub adjacency: Vec<Vec<u32>>,
}

impl ClusterGeometry {
    pub fn new(cluster: &Cluster, patch: &TriPatch) -> Self {
        let adjacency = cluster
            .sites
            .iter()
            .map(|&s| {
                let mut adj: Vec<u32> = patch
                    .neighbors(s)
                    .filter_map(|n| cluster.position(n).map(|p| p as u32))
                    .collect();
                adj.sort_unstable();
                adj
            })
            .collect();
        Self { sites: cluster.sites.clone(), adjacency }
    }

    pub fn position(&self, s: Site) -> Option<usize> {
        self.sites.binary_search(&s).ok()
    }
}

/// A can laid out for index arithmetic.
#[derive(Debug, Clone)]
pub struct CanLayout {
    pub geometry: Arc<ClusterGeometry>,
    pub shape: ClassShape,
}

impl CanLayout {
    pub fn new(geometry: Arc<ClusterGeometry>, shape: ClassShape) -> Self {
        Self { geometry, shape }
    }

    pub fn base_count(&self) -> usize {
        self.geometry.sites.len() * self.shape.size()
    }

    pub fn vertex_count(&self) -> usize {
        self.base_count() * FIBER_COUNT
    }

    pub fn local_of(&self, site_pos: usize, member: usize, fiber: u8) -> u32 {
        ((site_pos * self.shape.size() + member) * FIBER_COUNT + (fiber as usize - 1)) as u32
    }

    pub fn vertex(&self, local: u32) -> GVertex {
        let local = local as usize;
        let base = local / FIBER_COUNT;
        let fiber = (local % FIBER_COUNT) as u8 + 1;
        let cs = self.shape.size();
        GVertex::new(self.geometry.sites[base / cs], self.shape.member(base % cs), fiber)
    }

    pub fn local_index(&self, v: &GVertex) -> Option<u32> {
        let pos = self.geometry.position(v.site)?;
        let member = self.shape.member_index(&v.lamp)?;
        Some(self.local_of(pos, member, v.fiber))
    }

    /// Base neighbours of `base` inside the can, ascending.
    pub fn base_neighbors(&self, base: usize, members: &mut Vec<usize>, out: &mut Vec<usize>) {
        let cs = self.shape.size();
        let (pos, member) = (base / cs, base % cs);
        out.clear();
        for &p in &self.geometry.adjacency[pos] {
            out.push(p as usize * cs + member);
        }
        self.shape.neighbor_members(member, members);
        for &m in members.iter() {
            out.push(pos * cs + m);
        }
        out.sort_unstable();
    }

    /// `G`-neighbours of vertex `local` inside the can, ascending.
    pub fn vertex_neighbors(&self, local: u32, scratch: &mut Scratch, out: &mut Vec<u32>) {
        let local = local as usize;
        let base = local / FIBER_COUNT;
        self.base_neighbors(base, &mut scratch.members, &mut scratch.bases);
        out.clear();
        let mut own_done = false;
        for &b in &scratch.bases {
            if !own_done && b > base {
                push_own_fibers(local, base, out);
                own_done = true;
            }
            out.extend((0..FIBER_COUNT).map(|f| (b * FIBER_COUNT + f) as u32));
        }
        if !own_done {
            push_own_fibers(local, base, out);
        }
    }

    /// Number of `G`-edges induced on the can.
    pub fn induced_edge_count(&self) -> usize {
        let cs = self.shape.size();
        let mut members = Vec::new();
        let mut member_edges = 0;
        for m in 0..cs {
            self.shape.neighbor_members(m, &mut members);
            member_edges += members.len();
        }
        let site_edges: usize = self.geometry.adjacency.iter().map(Vec::len).sum();
        let base_edges = (site_edges * cs + member_edges * self.geometry.sites.len()) / 2;
        let n = self.base_count();
        n * FIBER_COUNT * (FIBER_COUNT - 1) / 2 + base_edges * FIBER_COUNT * FIBER_COUNT
    }
}

fn push_own_fibers(local: usize, base: usize, out: &mut Vec<u32>) {
    out.extend((0..FIBER_COUNT).map(|f| base * FIBER_COUNT + f).filter(|&v| v != local).map(|v| v as u32));
}

#[derive(Debug, Default)]
pub struct Scratch {
    members: Vec<usize>,
    bases: Vec<usize>,
}

/// Hamiltonian path through a type-0 can, as local indices.
///
/// A breadth-first spanning tree of `δ × σ` rooted at base 0 (neighbours in
/// ascending order) is walked depth-first, returning to each parent after a
/// child's subtree, with the final return to the root dropped; a base vertex
/// then occurs `deg_tree(v)` times. Its first occurrence receives fibres
/// `1..=11 − occ` and each later occurrence the next single fibre.
pub(crate) fn hamiltonian_order(layout: &CanLayout, can_name: &str) -> Result<Vec<u32>> {
    let n = layout.base_count();
    let mut parent = vec![u32::MAX; n];
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
    parent[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    let (mut members, mut nbrs) = (Vec::new(), Vec::new());
    let mut reached = 1;
    while let Some(b) = queue.pop_front() {
        layout.base_neighbors(b, &mut members, &mut nbrs);
        for &w in &nbrs {
            if parent[w] == u32::MAX {
                parent[w] = b as u32;
                children[b].push(w as u32);
                reached += 1;
                queue.push_back(w);
            }
        }
    }
    if reached != n {
        return Err(Error::DisconnectedBase { can: can_name.to_string(), reached, total: n });
    }

    let mut walk = Vec::with_capacity(2 * n);
    let mut stack: Vec<(u32, usize)> = vec![(0, 0)];
    walk.push(0u32);
    while let Some(top) = stack.last_mut() {
        let (v, next) = *top;
        if let Some(&c) = children[v as usize].get(next) {
            top.1 += 1;
            walk.push(c);
            stack.push((c, 0));
        } else {
            stack.pop();
            if let Some(&(p, _)) = stack.last() {
                walk.push(p);
            }
        }
    }
    if n > 1 {
        walk.pop();
    }

    let mut occurrences = vec![0u8; n];
    for &v in &walk {
        occurrences[v as usize] += 1;
    }
    let mut next_fiber = vec![0u8; n];
    let mut order = Vec::with_capacity(layout.vertex_count());
    for &v in &walk {
        let v = v as usize;
        let occ = occurrences[v];
        assert!(occ as usize <= FIBER_COUNT, "base vertex visited {occ} times");
        let run = if next_fiber[v] == 0 { FIBER_COUNT as u8 + 1 - occ } else { 1 };
        for f in next_fiber[v]..next_fiber[v] + run {
            order.push((v * FIBER_COUNT) as u32 + f as u32);
        }
        next_fiber[v] += run;
    }
    Ok(order)
}

/// Breadth-first tree of the can's induced subgraph rooted at local 0,
/// exploring neighbours in ascending order. Returns parent pointers; the
/// root is its own parent.
pub(crate) fn geodesic_tree(layout: &CanLayout) -> Vec<u32> {
    let n = layout.vertex_count();
    let mut parent = vec![u32::MAX; n];
    parent[0] = 0;
    let mut queue = VecDeque::from([0u32]);
    let mut scratch = Scratch::default();
    let mut nbrs = Vec::new();
    while let Some(v) = queue.pop_front() {
        layout.vertex_neighbors(v, &mut scratch, &mut nbrs);
        for &w in &nbrs {
            if parent[w as usize] == u32::MAX {
                parent[w as usize] = v;
                queue.push_back(w);
            }
        }
    }
    parent
}

/// Triangular-lattice adjacent pairs `(x, x')` with `x` in the child cluster
/// and `x'` in the parent cluster, as positions, ordered lexicographically.
pub(crate) fn adjacent_pairs(child: &ClusterGeometry, parent: &ClusterGeometry, patch: &TriPatch) -> Vec<(u32, u32)> {
    let mut pairs = Vec::new();
    for (i, &s) in child.sites.iter().enumerate() {
        let mut row: Vec<u32> = patch.neighbors(s).filter_map(|n| parent.position(n).map(|p| p as u32)).collect();
        row.sort_unstable();
        pairs.extend(row.into_iter().map(|p| (i as u32, p)));
    }
    pairs
}

/// Uniform draw from the `G`-edges joining a child can to its parent can.
///
/// Candidates `((x, y, k), (x', y, k'))` are indexed in the order
/// (adjacent pair, member `y` of the child class, `k`, `k'`); the index is
/// drawn with the stream of `derive_key(key, "edge:<child-id>:<parent-id>")`.
/// Returns local indices in the child and parent cans.
pub(crate) fn draw_inter_can_edge(
    child: &CanLayout,
    parent: &CanLayout,
    pairs: &[(u32, u32)],
    child_id: &str,
    parent_id: &str,
    key: u64,
) -> Result<(u32, u32)> {
    let cs = child.shape.size();
    let count = pairs.len() * cs * FIBER_COUNT * FIBER_COUNT;
    if count == 0 {
        return Err(Error::NoCandidates { child: child_id.to_string(), parent: parent_id.to_string() });
    }
    let idx = KeyedRng::for_tag(key, &format!("edge:{child_id}:{parent_id}")).below(count as u64) as usize;
    let k_parent = (idx % FIBER_COUNT) as u8 + 1;
    let k_child = (idx / FIBER_COUNT % FIBER_COUNT) as u8 + 1;
    let member = idx / (FIBER_COUNT * FIBER_COUNT) % cs;
    let (pc, pp) = pairs[idx / (FIBER_COUNT * FIBER_COUNT * cs)];
    let lamp = child.shape.member(member);
    let parent_member = parent
        .shape
        .member_index(&lamp)
        .expect("child class is contained in the parent class");
    Ok((
        child.local_of(pc as usize, member, k_child),
        parent.local_of(pp as usize, parent_member, k_parent),
    ))
}

fn layout_for(real: &Realization, can: &Can) -> CanLayout {
    let cluster = real.percolation.cluster(can.cluster);
    CanLayout::new(
        Arc::new(ClusterGeometry::new(cluster, &real.patch())),
        ClassShape::new(&can.class, &real.partitions),
    )
}

/// Hamiltonian path of a type-0 can as explicit vertices.
pub fn hamiltonian_path(can: &Can, real: &Realization) -> Result<Vec<GVertex>> {
    if can.can_type != 0 {
        return Err(Error::NotTypeZero { can: can.id() });
    }
    let layout = layout_for(real, can);
    let order = hamiltonian_order(&layout, &can.id())?;
    Ok(order.into_iter().map(|l| layout.vertex(l)).collect())
}

/// Edges Γ places inside a can: the Hamiltonian path for type 0, and for
/// type 1 either every induced edge or the geodesic breadth-first tree.
pub fn intra_can_structure(can: &Can, real: &Realization, mode: Mode) -> Result<Vec<(GVertex, GVertex)>> {
    let layout = layout_for(real, can);
    let local_edges: Vec<(u32, u32)> = if can.can_type == 0 {
        let order = hamiltonian_order(&layout, &can.id())?;
        order.windows(2).map(|w| (w[0], w[1])).collect()
    } else {
        match mode {
            Mode::FullInterior => {
                let mut scratch = Scratch::default();
                let mut nbrs = Vec::new();
                let mut edges = Vec::new();
                for v in 0..layout.vertex_count() as u32 {
                    layout.vertex_neighbors(v, &mut scratch, &mut nbrs);
                    edges.extend(nbrs.iter().filter(|&&w| w > v).map(|&w| (v, w)));
                }
                edges
            }
            Mode::SpanningTree => {
                let parent = geodesic_tree(&layout);
                (1..parent.len() as u32).map(|v| (parent[v as usize], v)).collect()
            }
        }
    };
    Ok(local_edges.into_iter().map(|(a, b)| (layout.vertex(a), layout.vertex(b))).collect())
}

/// The random Γ-edge joining `child` to `parent`.
pub fn inter_can_edge(real: &Realization, child: &Can, parent: &Can, key: u64) -> Result<super::CanEdge> {
    assert_eq!(
        real.percolation.tree.parent[child.cluster],
        Some(parent.cluster),
        "parent can must sit on the surrounding cluster"
    );
    let child_layout = layout_for(real, child);
    let parent_layout = layout_for(real, parent);
    assert!(
        parent_layout.shape.member_index(&child_layout.shape.member(0)).is_some(),
        "child class must lie inside the parent class"
    );
    let pairs = adjacent_pairs(&child_layout.geometry, &parent_layout.geometry, &real.patch());
    let (a, b) = draw_inter_can_edge(&child_layout, &parent_layout, &pairs, &child.id(), &parent.id(), key)?;
    Ok(super::CanEdge {
        child: child.clone(),
        parent_can: parent.clone(),
        edge: (child_layout.vertex(a), parent_layout.vertex(b)),
    })
}
