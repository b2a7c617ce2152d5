//! Site percolation on a rhombic patch of the triangular lattice, the
//! monochromatic clusters of a configuration, and the oriented cluster tree
//! in which every finite cluster points at the cluster surrounding it.

use std::cmp::Ordering;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keyed::KeyedRng;

/// Critical probability for site percolation on the triangular lattice.
pub const CRITICAL_P: f64 = 0.5;

/// Axial offsets of the six triangular-lattice neighbours.
pub const TRI_OFFSETS: [(i32, i32); 6] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)];

/// A lattice site in axial coordinates. Ordered row-major: by `y`, then `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    /// Hex distance between two sites.
    pub fn distance(self, other: Site) -> u32 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        ((dx.abs() + dy.abs() + (dx + dy).abs()) / 2) as u32
    }
}

impl Ord for Site {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for Site {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The rhombus `{0..m-1}²` in axial coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriPatch {
    pub side: usize,
}

impl TriPatch {
    pub fn new(side: usize) -> Self {
        assert!(side > 0, "patch must be nonempty");
        Self { side }
    }

    pub fn len(&self) -> usize {
        self.side * self.side
    }

    pub fn is_empty(&self) -> bool {
        self.side == 0
    }

    pub fn contains(&self, s: Site) -> bool {
        let m = self.side as i32;
        (0..m).contains(&s.x) && (0..m).contains(&s.y)
    }

    /// Row-major index of a site.
    pub fn index(&self, s: Site) -> usize {
        debug_assert!(self.contains(s));
        s.y as usize * self.side + s.x as usize
    }

    pub fn site(&self, index: usize) -> Site {
        Site::new((index % self.side) as i32, (index / self.side) as i32)
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(|i| self.site(i))
    }

    pub fn is_boundary(&self, s: Site) -> bool {
        let last = self.side as i32 - 1;
        s.x == 0 || s.y == 0 || s.x == last || s.y == last
    }

    /// In-patch neighbours of `s`, in the fixed [`TRI_OFFSETS`] order.
    pub fn neighbors(&self, s: Site) -> impl Iterator<Item = Site> + '_ {
        TRI_OFFSETS
            .iter()
            .map(move |&(dx, dy)| Site::new(s.x + dx, s.y + dy))
            .filter(|&n| self.contains(n))
    }

    pub fn center(&self) -> Site {
        let c = (self.side / 2) as i32;
        Site::new(c, c)
    }
}

/// A 0/1 site configuration; 1 is open, 0 is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercField {
    pub patch: TriPatch,
    pub p: f64,
    states: Vec<u8>,
}

impl PercField {
    /// Builds a field from row-major states. Panics on a length mismatch or a
    /// state outside `{0, 1}`.
    pub fn from_states(patch: TriPatch, p: f64, states: Vec<u8>) -> Self {
        assert_eq!(states.len(), patch.len(), "one state per site");
        assert!(states.iter().all(|&s| s <= 1), "states are 0 or 1");
        Self { patch, p, states }
    }

    /// Field with every site closed except `open`.
    pub fn with_open_sites(patch: TriPatch, open: &[Site]) -> Self {
        let mut states = vec![0; patch.len()];
        for &s in open {
            states[patch.index(s)] = 1;
        }
        Self::from_states(patch, CRITICAL_P, states)
    }

    pub fn state(&self, s: Site) -> u8 {
        self.states[self.patch.index(s)]
    }

    pub fn states(&self) -> &[u8] {
        &self.states
    }
}

/// Samples each site independently: open with probability `p`, drawn from
/// the stream of `derive_key(key, "perc:<x>:<y>")`.
pub fn sample_percolation(patch: TriPatch, p: f64, key: u64) -> PercField {
    assert!((0.0..=1.0).contains(&p), "p must lie in [0, 1]");
    let states = patch
        .sites()
        .map(|s| {
            let mut rng = KeyedRng::for_tag(key, &format!("perc:{}:{}", s.x, s.y));
            u8::from(rng.bernoulli(p))
        })
        .collect();
    PercField { patch, p, states }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    /// Row-major index of the smallest site.
    pub id: usize,
    pub state: u8,
    /// Sites in row-major order.
    pub sites: Vec<Site>,
    pub touches_boundary: bool,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Position of `s` in [`Cluster::sites`].
    pub fn position(&self, s: Site) -> Option<usize> {
        self.sites.binary_search(&s).ok()
    }
}

/// The clusters of a field, ordered by id, with a site lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    pub clusters: Vec<Cluster>,
    label: Vec<u32>,
}

impl Clustering {
    /// Index into `clusters` of the cluster containing `s`.
    pub fn cluster_index(&self, patch: &TriPatch, s: Site) -> usize {
        self.label[patch.index(s)] as usize
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }
}

struct DisjointSets {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra as usize].cmp(&self.rank[rb as usize]) {
            Ordering::Less => self.parent[ra as usize] = rb,
            Ordering::Greater => self.parent[rb as usize] = ra,
            Ordering::Equal => {
                self.parent[rb as usize] = ra;
                self.rank[ra as usize] += 1;
            }
        }
    }
}

/// Monochromatic connected components of the field.
pub fn find_clusters(field: &PercField) -> Clustering {
    let patch = field.patch;
    let mut sets = DisjointSets::new(patch.len());
    for s in patch.sites() {
        let i = patch.index(s);
        for n in patch.neighbors(s) {
            let j = patch.index(n);
            if j > i && field.states[i] == field.states[j] {
                sets.union(i as u32, j as u32);
            }
        }
    }

    // Row-major sweep: the first site seen for a root is its smallest site,
    // so clusters come out sorted by id.
    let mut root_to_cluster = vec![u32::MAX; patch.len()];
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut label = vec![0u32; patch.len()];
    for (i, slot) in label.iter_mut().enumerate() {
        let root = sets.find(i as u32) as usize;
        if root_to_cluster[root] == u32::MAX {
            root_to_cluster[root] = clusters.len() as u32;
            clusters.push(Cluster {
                id: i,
                state: field.states[i],
                sites: Vec::new(),
                touches_boundary: false,
            });
        }
        let c = root_to_cluster[root];
        *slot = c;
        let site = patch.site(i);
        let cluster = &mut clusters[c as usize];
        cluster.sites.push(site);
        cluster.touches_boundary |= patch.is_boundary(site);
    }
    Clustering { clusters, label }
}

/// The oriented cluster tree with levels and interior sizes, indexed like
/// [`Clustering::clusters`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterTree {
    /// Surrounding cluster; `None` for boundary-touching clusters.
    pub parent: Vec<Option<usize>>,
    /// Children in increasing cluster order.
    pub children: Vec<Vec<usize>>,
    /// Leaves have level 1.
    pub level: Vec<u32>,
    /// Number of sites of the cluster together with everything it encloses.
    pub interior_size: Vec<usize>,
}

impl ClusterTree {
    pub fn is_root(&self, cluster: usize) -> bool {
        self.parent[cluster].is_none()
    }

    /// The cluster and all of its descendants, parents before children.
    pub fn subtree(&self, cluster: usize) -> Vec<usize> {
        let mut out = vec![cluster];
        let mut next = 0;
        while next < out.len() {
            let c = out[next];
            out.extend_from_slice(&self.children[c]);
            next += 1;
        }
        out
    }
}

/// Links every finite cluster to the adjacent cluster separating it from
/// the patch boundary, then computes levels and interiors.
pub fn build_cluster_tree(clustering: &Clustering, field: &PercField) -> Result<ClusterTree> {
    let patch = field.patch;
    let n = clustering.len();
    let mut parent = vec![None; n];
    let mut outer = Vec::new();
    for (ci, cluster) in clustering.clusters.iter().enumerate() {
        if cluster.touches_boundary {
            continue;
        }
        outer_mask(cluster, &mut outer);
        let (bx, by, w, _) = bounding_frame(cluster);
        let in_outer = |s: Site| outer[((s.y - by) as usize) * w + (s.x - bx) as usize];

        let mut surrounding: Vec<usize> = Vec::new();
        for &s in &cluster.sites {
            for nb in patch.neighbors(s) {
                let other = clustering.cluster_index(&patch, nb);
                if other != ci && in_outer(nb) && !surrounding.contains(&other) {
                    surrounding.push(other);
                }
            }
        }
        if surrounding.len() != 1 {
            return Err(Error::SurroundingNotUnique {
                cluster: cluster.id,
                found: surrounding.len(),
            });
        }
        parent[ci] = Some(surrounding[0]);
    }

    let mut children = vec![Vec::new(); n];
    for (c, p) in parent.iter().enumerate() {
        if let Some(p) = *p {
            children[p].push(c);
        }
    }

    // Every child is enclosed by its parent, so it has a strictly smaller
    // bounding box; ordering by box area processes children first.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&c| {
        let (_, _, w, h) = bounding_frame(&clustering.clusters[c]);
        (w * h, c)
    });
    let mut level = vec![1u32; n];
    let mut interior_size = vec![0usize; n];
    for &c in &order {
        let mut size = clustering.clusters[c].len();
        let mut deepest = 0;
        for &ch in &children[c] {
            size += interior_size[ch];
            deepest = deepest.max(level[ch]);
        }
        interior_size[c] = size;
        level[c] = deepest + 1;
    }
    Ok(ClusterTree { parent, children, level, interior_size })
}

/// Bounding box of the cluster grown by one site on each side:
/// `(min_x, min_y, width, height)`.
fn bounding_frame(cluster: &Cluster) -> (i32, i32, usize, usize) {
    let (mut x0, mut y0, mut x1, mut y1) = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
    for s in &cluster.sites {
        x0 = x0.min(s.x);
        y0 = y0.min(s.y);
        x1 = x1.max(s.x);
        y1 = y1.max(s.y);
    }
    (x0 - 1, y0 - 1, (x1 - x0 + 3) as usize, (y1 - y0 + 3) as usize)
}

/// Marks, inside the grown bounding box of a non-boundary cluster, the
/// complement sites connected to the box frame. The frame avoids the cluster
/// and every path to the patch boundary crosses it, so these are exactly the
/// in-box sites of the unbounded complement component.
fn outer_mask(cluster: &Cluster, mask: &mut Vec<bool>) {
    let (bx, by, w, h) = bounding_frame(cluster);
    let local = |s: Site| ((s.y - by) as usize) * w + (s.x - bx) as usize;
    let mut blocked = vec![false; w * h];
    for &s in &cluster.sites {
        blocked[local(s)] = true;
    }
    mask.clear();
    mask.resize(w * h, false);
    let mut queue = VecDeque::new();
    for yy in 0..h {
        for xx in 0..w {
            if yy == 0 || xx == 0 || yy == h - 1 || xx == w - 1 {
                mask[yy * w + xx] = true;
                queue.push_back(Site::new(bx + xx as i32, by + yy as i32));
            }
        }
    }
    while let Some(s) = queue.pop_front() {
        for &(dx, dy) in &TRI_OFFSETS {
            let nb = Site::new(s.x + dx, s.y + dy);
            if nb.x < bx || nb.y < by || nb.x >= bx + w as i32 || nb.y >= by + h as i32 {
                continue;
            }
            let l = local(nb);
            if !blocked[l] && !mask[l] {
                mask[l] = true;
                queue.push_back(nb);
            }
        }
    }
}

/// A sampled field together with its clusters and cluster tree.
#[derive(Debug, Clone)]
pub struct Percolation {
    pub field: PercField,
    pub clustering: Clustering,
    pub tree: ClusterTree,
}

impl Percolation {
    pub fn from_field(field: PercField) -> Result<Self> {
        let clustering = find_clusters(&field);
        let tree = build_cluster_tree(&clustering, &field)?;
        Ok(Self { field, clustering, tree })
    }

    pub fn sample(patch: TriPatch, p: f64, key: u64) -> Result<Self> {
        Self::from_field(sample_percolation(patch, p, key))
    }

    pub fn patch(&self) -> TriPatch {
        self.field.patch
    }

    pub fn cluster_index(&self, s: Site) -> usize {
        self.clustering.cluster_index(&self.field.patch, s)
    }

    pub fn cluster(&self, index: usize) -> &Cluster {
        &self.clustering.clusters[index]
    }
}
