use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lamplighter::{p_class_of, ClassShape, PClassId};

use super::layout::{adjacent_pairs, draw_inter_can_edge, geodesic_tree, hamiltonian_order, Scratch};
use super::{can_id, Can, CanLayout, ClusterGeometry, GVertex, Mode, Realization};

/// Compact vertex handle: a can slot of the oracle and a local index in it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId {
    pub can: u32,
    pub local: u32,
}

enum Structure {
    Path { order: Vec<u32>, position: Vec<u32> },
    Induced,
    Tree { parent: Vec<u32>, offsets: Vec<u32>, children: Vec<u32> },
}

struct Built {
    structure: Structure,
    /// Inter-can edges at local vertices of this can.
    links: HashMap<u32, Vec<VertexId>>,
}

struct Slot {
    can: Can,
    id: String,
    layout: CanLayout,
    parent: Option<Option<u32>>,
    up_edge: Option<Option<(u32, u32)>>,
    built: Option<Built>,
}

type CanKey = (usize, i64, Vec<i64>);

/// Lazily materialised adjacency of Γ.
///
/// Cans are registered on first reference and built (internal structure plus
/// incident inter-can edges) on first neighbour query. Every random choice is
/// keyed by canonical tags, so the graph does not depend on query order.
pub struct GammaOracle {
    real: Realization,
    mode: Mode,
    key: u64,
    slots: Vec<Slot>,
    index: HashMap<CanKey, u32>,
    geometry: HashMap<usize, Arc<ClusterGeometry>>,
    pairs: HashMap<usize, Arc<Vec<(u32, u32)>>>,
    scratch: Scratch,
}

impl GammaOracle {
    pub fn new(real: Realization, mode: Mode, key: u64) -> Self {
        Self {
            real,
            mode,
            key,
            slots: Vec::new(),
            index: HashMap::new(),
            geometry: HashMap::new(),
            pairs: HashMap::new(),
            scratch: Scratch::default(),
        }
    }

    pub fn realization(&self) -> &Realization {
        &self.real
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn built_count(&self) -> usize {
        self.slots.iter().filter(|s| s.built.is_some()).count()
    }

    pub fn can(&self, slot: u32) -> &Can {
        &self.slots[slot as usize].can
    }

    pub fn can_name(&self, slot: u32) -> &str {
        &self.slots[slot as usize].id
    }

    fn geometry_of(&mut self, cluster: usize) -> Arc<ClusterGeometry> {
        let real = &self.real;
        self.geometry
            .entry(cluster)
            .or_insert_with(|| Arc::new(ClusterGeometry::new(real.percolation.cluster(cluster), &real.patch())))
            .clone()
    }

    fn register(&mut self, cluster: usize, class: PClassId) -> u32 {
        let key = (cluster, class.block_index, class.external_lamps.clone());
        if let Some(&slot) = self.index.get(&key) {
            return slot;
        }
        let can = self.real.make_can(cluster, class);
        let layout = CanLayout::new(self.geometry_of(cluster), ClassShape::new(&can.class, &self.real.partitions));
        let id = can_id(can.cluster_id, can.level, can.class.block_index, &can.class.external_lamps);
        let slot = self.slots.len() as u32;
        self.slots.push(Slot { can, id, layout, parent: None, up_edge: None, built: None });
        self.index.insert(key, slot);
        slot
    }

    /// Registers `can` (if needed) and returns its slot.
    pub fn slot_of_can(&mut self, can: &Can) -> u32 {
        self.register(can.cluster, can.class.clone())
    }

    pub fn vertex_id(&mut self, v: &GVertex) -> Result<VertexId> {
        let can = super::can_of(v, &self.real)?;
        let slot = self.slot_of_can(&can);
        let local = self.slots[slot as usize]
            .layout
            .local_index(v)
            .expect("vertex lies in its own can");
        Ok(VertexId { can: slot, local })
    }

    pub fn vertex(&self, id: VertexId) -> GVertex {
        self.slots[id.can as usize].layout.vertex(id.local)
    }

    /// Slot of the can surrounding `slot`'s can, or `None` for a top can.
    pub fn parent_slot(&mut self, slot: u32) -> Option<u32> {
        if let Some(p) = self.slots[slot as usize].parent {
            return p;
        }
        let can = &self.slots[slot as usize].can;
        let parent = self.real.parent_cluster(can.cluster).map(|pc| {
            let level = self.real.class_level(pc);
            let member = self.slots[slot as usize].layout.shape.member(0);
            (pc, p_class_of(&member, level, &self.real.partitions))
        });
        let result = parent.map(|(pc, class)| self.register(pc, class));
        self.slots[slot as usize].parent = Some(result);
        result
    }

    pub fn is_top(&mut self, slot: u32) -> bool {
        self.parent_slot(slot).is_none()
    }

    /// Top or capped: ball growth stops once it reaches such a can.
    pub fn is_frontier(&mut self, slot: u32) -> bool {
        self.real.is_capped_cluster(self.slots[slot as usize].can.cluster) || self.is_top(slot)
    }

    /// The Γ-edge from `slot`'s can to its parent can: `(child end, parent end)`.
    pub fn up_edge(&mut self, slot: u32) -> Result<Option<(VertexId, VertexId)>> {
        let Some(parent) = self.parent_slot(slot) else {
            return Ok(None);
        };
        if let Some(Some((a, b))) = self.slots[slot as usize].up_edge {
            return Ok(Some((VertexId { can: slot, local: a }, VertexId { can: parent, local: b })));
        }
        let cluster = self.slots[slot as usize].can.cluster;
        let pairs = match self.pairs.get(&cluster) {
            Some(p) => p.clone(),
            None => {
                let child_geo = self.slots[slot as usize].layout.geometry.clone();
                let parent_geo = self.slots[parent as usize].layout.geometry.clone();
                let p = Arc::new(adjacent_pairs(&child_geo, &parent_geo, &self.real.patch()));
                self.pairs.insert(cluster, p.clone());
                p
            }
        };
        let (child, par) = (&self.slots[slot as usize], &self.slots[parent as usize]);
        let (a, b) = draw_inter_can_edge(&child.layout, &par.layout, &pairs, &child.id, &par.id, self.key)?;
        self.slots[slot as usize].up_edge = Some(Some((a, b)));
        Ok(Some((VertexId { can: slot, local: a }, VertexId { can: parent, local: b })))
    }

    /// Child cans of `slot`: every class at the child cluster's level inside
    /// this can's class, for every child cluster.
    pub fn child_slots(&mut self, slot: u32) -> Vec<u32> {
        let cluster = self.slots[slot as usize].can.cluster;
        let shape = self.slots[slot as usize].layout.shape.clone();
        let kids = self.real.percolation.tree.children[cluster].clone();
        let mut out = Vec::new();
        for child in kids {
            debug_assert!(!self.real.is_outer_cluster(child));
            let level = self.real.class_level(child);
            for class in shape.subclasses(level, &self.real.partitions) {
                out.push(self.register(child, class));
            }
        }
        out
    }

    fn ensure_built(&mut self, slot: u32) -> Result<()> {
        if self.slots[slot as usize].built.is_some() {
            return Ok(());
        }
        let structure = {
            let s = &self.slots[slot as usize];
            if s.can.can_type == 0 {
                let order = hamiltonian_order(&s.layout, &s.id)?;
                let mut position = vec![0u32; order.len()];
                for (i, &v) in order.iter().enumerate() {
                    position[v as usize] = i as u32;
                }
                Structure::Path { order, position }
            } else {
                match self.mode {
                    Mode::FullInterior => Structure::Induced,
                    Mode::SpanningTree => tree_structure(geodesic_tree(&s.layout)),
                }
            }
        };

        let mut links: HashMap<u32, Vec<VertexId>> = HashMap::new();
        if let Some((own, other)) = self.up_edge(slot)? {
            links.entry(own.local).or_default().push(other);
        }
        for child in self.child_slots(slot) {
            let (child_end, own) = self.up_edge(child)?.expect("child can has a parent");
            debug_assert_eq!(own.can, slot);
            links.entry(own.local).or_default().push(child_end);
        }
        self.slots[slot as usize].built = Some(Built { structure, links });
        Ok(())
    }

    /// Γ-neighbours of `id`, ascending.
    pub fn neighbors(&mut self, id: VertexId) -> Result<Vec<VertexId>> {
        self.ensure_built(id.can)?;
        let slot = &self.slots[id.can as usize];
        let built = slot.built.as_ref().expect("built above");
        let mut out: Vec<VertexId> = Vec::new();
        let local = |l: u32| VertexId { can: id.can, local: l };
        match &built.structure {
            Structure::Path { order, position } => {
                let p = position[id.local as usize] as usize;
                if p > 0 {
                    out.push(local(order[p - 1]));
                }
                if p + 1 < order.len() {
                    out.push(local(order[p + 1]));
                }
            }
            Structure::Induced => {
                let mut nbrs = Vec::new();
                slot.layout.vertex_neighbors(id.local, &mut self.scratch, &mut nbrs);
                out.extend(nbrs.into_iter().map(local));
            }
            Structure::Tree { parent, offsets, children } => {
                let v = id.local as usize;
                if parent[v] as usize != v {
                    out.push(local(parent[v]));
                }
                let kids = &children[offsets[v] as usize..offsets[v + 1] as usize];
                out.extend(kids.iter().map(|&c| local(c)));
            }
        }
        if let Some(extra) = built.links.get(&id.local) {
            out.extend_from_slice(extra);
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn gamma_neighbors(&mut self, v: &GVertex) -> Result<Vec<GVertex>> {
        let id = self.vertex_id(v)?;
        Ok(self.neighbors(id)?.into_iter().map(|n| self.vertex(n)).collect())
    }

    /// Diameter of the internal geodesic tree of a type-1 can in
    /// spanning-tree mode; `None` for other structures.
    pub fn tree_diameter(&mut self, slot: u32) -> Result<Option<u32>> {
        self.ensure_built(slot)?;
        let built = self.slots[slot as usize].built.as_ref().expect("built above");
        let Structure::Tree { parent, offsets, children } = &built.structure else {
            return Ok(None);
        };
        let n = parent.len();
        let farthest = |from: usize| {
            let mut dist = vec![u32::MAX; n];
            dist[from] = 0;
            let mut queue = VecDeque::from([from]);
            let mut last = (from, 0);
            while let Some(v) = queue.pop_front() {
                last = (v, dist[v]);
                let up = (parent[v] as usize != v).then_some(parent[v]);
                let kids = &children[offsets[v] as usize..offsets[v + 1] as usize];
                for &w in up.iter().chain(kids) {
                    if dist[w as usize] == u32::MAX {
                        dist[w as usize] = dist[v] + 1;
                        queue.push_back(w as usize);
                    }
                }
            }
            last
        };
        let (a, _) = farthest(0);
        let (_, d) = farthest(a);
        Ok(Some(d))
    }

    /// Internal Γ-edges of a built can, as local pairs `(a, b)` with `a < b`.
    /// Induced structures are expanded; meant for small cans.
    pub fn internal_edges(&mut self, slot: u32) -> Result<Vec<(u32, u32)>> {
        self.ensure_built(slot)?;
        let s = &self.slots[slot as usize];
        let built = s.built.as_ref().expect("built above");
        let mut edges: Vec<(u32, u32)> = match &built.structure {
            Structure::Path { order, .. } => order.windows(2).map(|w| (w[0].min(w[1]), w[0].max(w[1]))).collect(),
            Structure::Tree { parent, .. } => (0..parent.len() as u32)
                .filter(|&v| parent[v as usize] != v)
                .map(|v| (parent[v as usize].min(v), parent[v as usize].max(v)))
                .collect(),
            Structure::Induced => {
                let mut nbrs = Vec::new();
                let mut edges = Vec::new();
                for v in 0..s.layout.vertex_count() as u32 {
                    s.layout.vertex_neighbors(v, &mut self.scratch, &mut nbrs);
                    edges.extend(nbrs.iter().filter(|&&w| w > v).map(|&w| (v, w)));
                }
                edges
            }
        };
        edges.sort_unstable();
        Ok(edges)
    }
}

fn tree_structure(parent: Vec<u32>) -> Structure {
    let n = parent.len();
    let mut counts = vec![0u32; n + 1];
    for (v, &p) in parent.iter().enumerate() {
        if p as usize != v {
            counts[p as usize + 1] += 1;
        }
    }
    for i in 0..n {
        counts[i + 1] += counts[i];
    }
    let offsets = counts.clone();
    let mut fill = counts;
    let mut children = vec![0u32; offsets[n] as usize];
    for (v, &p) in parent.iter().enumerate() {
        if p as usize != v {
            children[fill[p as usize] as usize] = v as u32;
            fill[p as usize] += 1;
        }
    }
    Structure::Tree { parent, offsets, children }
}

impl std::fmt::Debug for GammaOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GammaOracle")
            .field("mode", &self.mode)
            .field("slots", &self.slots.len())
            .field("built", &self.built_count())
            .finish()
    }
}
