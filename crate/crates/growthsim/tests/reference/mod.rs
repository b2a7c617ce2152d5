//! Brute-force reference for small windows: flood-fill clustering, an
//! explicit cluster tree, eager construction of every can and Γ-edge over one
//! top-level lamplighter class, and plain BFS.
//!
//! Only the keyed randomness contract and the documented canonical orderings
//! are shared with the library; everything else is rebuilt from scratch.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, VecDeque};

use growthsim::keyed::{derive_key, fnv1a64, KeyedRng};
use growthsim::{GVertex, LampElement, Mode, Site};

pub const WINDOW_CAP: usize = 10_000;

const OFFSETS: [(i32, i32); 6] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefError {
    WindowTooLarge { vertices: usize, cap: usize },
    RootMissing(GVertex),
}

pub fn sample_states(side: usize, p: f64, key: u64) -> Vec<u8> {
    let mut states = Vec::with_capacity(side * side);
    for y in 0..side {
        for x in 0..side {
            let mut rng = KeyedRng::new(derive_key(key, &format!("perc:{x}:{y}")));
            states.push(u8::from(rng.unit() < p));
        }
    }
    states
}

pub fn sample_draws(c_seq: &[u64], key: u64) -> Vec<u64> {
    (0..c_seq.len())
        .map(|i| 1 + KeyedRng::new(derive_key(key, &format!("offset:{}", i + 1))).below(c_seq[i]))
        .collect()
}

#[derive(Debug, Clone)]
pub struct RefCluster {
    pub id: usize,
    pub state: u8,
    pub sites: Vec<(i32, i32)>,
    pub boundary: bool,
}

#[derive(Debug, Clone)]
pub struct RefPercolation {
    pub side: usize,
    pub states: Vec<u8>,
    pub label: Vec<usize>,
    pub clusters: Vec<RefCluster>,
    pub parent: Vec<Option<usize>>,
    pub height: Vec<usize>,
    pub interior: Vec<usize>,
}

impl RefPercolation {
    fn inside(&self, x: i32, y: i32) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.side && (y as usize) < self.side
    }

    pub fn at(&self, x: i32, y: i32) -> usize {
        self.label[y as usize * self.side + x as usize]
    }

    pub fn new(side: usize, states: Vec<u8>) -> Self {
        let mut me = RefPercolation {
            side,
            states,
            label: vec![usize::MAX; side * side],
            clusters: Vec::new(),
            parent: Vec::new(),
            height: Vec::new(),
            interior: Vec::new(),
        };
        // Flood fill, visiting seeds in row-major order.
        for y in 0..side as i32 {
            for x in 0..side as i32 {
                if me.at(x, y) != usize::MAX {
                    continue;
                }
                let c = me.clusters.len();
                let state = me.states[y as usize * side + x as usize];
                let mut sites = Vec::new();
                let mut stack = vec![(x, y)];
                me.label[y as usize * side + x as usize] = c;
                while let Some((a, b)) = stack.pop() {
                    sites.push((a, b));
                    for (dx, dy) in OFFSETS {
                        let (u, v) = (a + dx, b + dy);
                        if me.inside(u, v)
                            && me.at(u, v) == usize::MAX
                            && me.states[v as usize * side + u as usize] == state
                        {
                            me.label[v as usize * side + u as usize] = c;
                            stack.push((u, v));
                        }
                    }
                }
                sites.sort_by_key(|&(a, b)| (b, a));
                let boundary = sites
                    .iter()
                    .any(|&(a, b)| a == 0 || b == 0 || a as usize == side - 1 || b as usize == side - 1);
                let id = sites[0].1 as usize * side + sites[0].0 as usize;
                me.clusters.push(RefCluster { id, state, sites, boundary });
            }
        }
        let n = me.clusters.len();
        me.parent = (0..n).map(|c| me.surrounding(c)).collect();
        me.height = vec![0; n];
        me.interior = vec![0; n];
        for c in 0..n {
            me.fill_height(c);
        }
        me
    }

    /// Floods the padded patch minus the cluster from outside and returns the
    /// unique cluster met next to the cluster.
    fn surrounding(&self, c: usize) -> Option<usize> {
        if self.clusters[c].boundary {
            return None;
        }
        let m = self.side as i32;
        let mut seen = vec![false; (self.side + 2) * (self.side + 2)];
        let idx = |x: i32, y: i32| (y + 1) as usize * (self.side + 2) + (x + 1) as usize;
        let mut queue = VecDeque::new();
        for y in -1..=m {
            for x in -1..=m {
                if x == -1 || y == -1 || x == m || y == m {
                    seen[idx(x, y)] = true;
                    queue.push_back((x, y));
                }
            }
        }
        let mut found = Vec::new();
        while let Some((a, b)) = queue.pop_front() {
            for (dx, dy) in OFFSETS {
                let (u, v) = (a + dx, b + dy);
                if u < -1 || v < -1 || u > m || v > m || seen[idx(u, v)] {
                    continue;
                }
                if self.inside(u, v) && self.at(u, v) == c {
                    if self.inside(a, b) && !found.contains(&self.at(a, b)) {
                        found.push(self.at(a, b));
                    }
                    continue;
                }
                seen[idx(u, v)] = true;
                queue.push_back((u, v));
            }
        }
        assert_eq!(found.len(), 1, "cluster {c} is surrounded by {found:?}");
        Some(found[0])
    }

    fn fill_height(&mut self, c: usize) -> usize {
        if self.height[c] > 0 {
            return self.height[c];
        }
        let kids: Vec<usize> = (0..self.clusters.len()).filter(|&k| self.parent[k] == Some(c)).collect();
        let mut h = 1;
        let mut interior = self.clusters[c].sites.len();
        for k in kids {
            h = h.max(self.fill_height(k) + 1);
            interior += self.interior[k];
        }
        self.height[c] = h;
        self.interior[c] = interior;
        h
    }
}

/// Offsets `α_i` and block lengths `b_i` from explicit draws.
pub fn partition_levels(c_seq: &[u64], draws: &[u64]) -> (Vec<i64>, Vec<i64>) {
    let (mut alpha, mut b) = (Vec::new(), Vec::new());
    let (mut a, mut len) = (0i64, 1i64);
    for (&c, &x) in c_seq.iter().zip(draws) {
        a += x as i64 * len;
        len *= c as i64;
        alpha.push(a);
        b.push(len);
    }
    (alpha, b)
}

fn lamp_neighbors(e: &LampElement) -> Vec<LampElement> {
    let mut lamps: Vec<i64> = e.lamps().to_vec();
    match lamps.binary_search(&e.marker) {
        Ok(i) => {
            lamps.remove(i);
        }
        Err(i) => lamps.insert(i, e.marker),
    }
    vec![
        LampElement::new(lamps, e.marker),
        LampElement::new(e.lamps().to_vec(), e.marker + 1),
        LampElement::new(e.lamps().to_vec(), e.marker - 1),
    ]
}

fn hex_adjacent(a: Site, b: Site) -> bool {
    OFFSETS.iter().any(|&(dx, dy)| a.x + dx == b.x && a.y + dy == b.y)
}

fn g_adjacent(u: &GVertex, v: &GVertex) -> bool {
    if u.site == v.site && u.lamp == v.lamp {
        return u.fiber != v.fiber;
    }
    (u.lamp == v.lamp && hex_adjacent(u.site, v.site))
        || (u.site == v.site && lamp_neighbors(&u.lamp).contains(&v.lamp))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassKey {
    pub level: usize,
    pub block: i64,
    pub start: i64,
    pub len: i64,
    pub external: Vec<i64>,
}

fn class_key(e: &LampElement, level: usize, alpha: &[i64], b: &[i64]) -> ClassKey {
    let (a, len) = (alpha[level - 1], b[level - 1]);
    let block = (e.marker - a).div_euclid(len);
    let start = a + block * len;
    let external = e.lamps().iter().copied().filter(|&l| l < start || l >= start + len).collect();
    ClassKey { level, block, start, len, external }
}

/// Canonical order inside a class: marker, then in-block lamp bitmask.
fn member_rank(e: &LampElement, k: &ClassKey) -> (i64, u64) {
    let mask = e
        .lamps()
        .iter()
        .filter(|&&l| l >= k.start && l < k.start + k.len)
        .fold(0u64, |m, &l| m | 1 << (l - k.start));
    (e.marker, mask)
}

fn vertex_rank(v: &GVertex, k: &ClassKey) -> (i32, i32, i64, u64, u8) {
    let (marker, mask) = member_rank(&v.lamp, k);
    (v.site.y, v.site.x, marker, mask, v.fiber)
}

#[derive(Debug, Clone)]
pub struct RefCan {
    pub cluster: usize,
    pub class: ClassKey,
    pub height: usize,
    pub can_type: u8,
    /// Window indices in canonical order.
    pub vertices: Vec<usize>,
    pub parent: Option<usize>,
    /// `(child end, parent end)`.
    pub up_edge: Option<(usize, usize)>,
    pub frontier: bool,
    pub name: String,
}

/// Γ on every non-boundary vertex whose lamp element lies in the top-level
/// class of the identity.
#[derive(Debug, Clone)]
pub struct EagerWindow {
    pub perc: RefPercolation,
    pub alpha: Vec<i64>,
    pub block_len: Vec<i64>,
    pub vertices: Vec<GVertex>,
    pub index: HashMap<GVertex, usize>,
    pub adj: Vec<Vec<usize>>,
    pub can_of: Vec<usize>,
    pub cans: Vec<RefCan>,
}

fn can_name(cluster_id: usize, k: &ClassKey) -> String {
    let joined: Vec<String> = k.external.iter().map(|l| l.to_string()).collect();
    format!("{cluster_id}.{}.{}.{:016x}", k.level, k.block, fnv1a64(&joined.join(",")))
}

pub fn eager_gamma(
    side: usize,
    states: Vec<u8>,
    c_seq: &[u64],
    draws: &[u64],
    mode: Mode,
    key: u64,
) -> Result<EagerWindow, RefError> {
    let perc = RefPercolation::new(side, states);
    let (alpha, block_len) = partition_levels(c_seq, draws);
    let top = c_seq.len();

    let top_class = class_key(&LampElement::identity(), top, &alpha, &block_len);
    let mut lamps = Vec::new();
    for marker in top_class.start..top_class.start + top_class.len {
        for mask in 0u64..1 << top_class.len {
            let lit = (0..top_class.len).filter(|j| mask >> j & 1 == 1).map(|j| top_class.start + j);
            lamps.push(LampElement::new(lit, marker));
        }
    }
    let inner_sites: Vec<Site> = (0..side as i32)
        .flat_map(|y| (0..side as i32).map(move |x| Site::new(x, y)))
        .filter(|s| !perc.clusters[perc.at(s.x, s.y)].boundary)
        .collect();
    let total = inner_sites.len() * lamps.len() * 10;
    if total > WINDOW_CAP {
        return Err(RefError::WindowTooLarge { vertices: total, cap: WINDOW_CAP });
    }

    let mut vertices = Vec::with_capacity(total);
    for &s in &inner_sites {
        for l in &lamps {
            for k in 1..=10 {
                vertices.push(GVertex::new(s, l.clone(), k));
            }
        }
    }
    let index: HashMap<GVertex, usize> = vertices.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();

    // Group vertices into cans.
    let level_of = |c: usize| perc.height[c].min(top);
    let mut groups: BTreeMap<(usize, ClassKey), Vec<usize>> = BTreeMap::new();
    for (i, v) in vertices.iter().enumerate() {
        let c = perc.at(v.site.x, v.site.y);
        groups.entry((c, class_key(&v.lamp, level_of(c), &alpha, &block_len))).or_default().push(i);
    }
    let mut can_of = vec![usize::MAX; vertices.len()];
    let mut cans = Vec::new();
    let mut can_index = HashMap::new();
    for ((cluster, class), mut members) in groups {
        members.sort_by_key(|&i| vertex_rank(&vertices[i], &class));
        for &i in &members {
            can_of[i] = cans.len();
        }
        can_index.insert((cluster, class.clone()), cans.len());
        cans.push(RefCan {
            cluster,
            name: can_name(perc.clusters[cluster].id, &class),
            class,
            height: perc.height[cluster],
            can_type: perc.clusters[cluster].state,
            vertices: members,
            parent: None,
            up_edge: None,
            frontier: false,
        });
    }

    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
    let add = |adj: &mut Vec<Vec<usize>>, a: usize, b: usize| {
        adj[a].push(b);
        adj[b].push(a);
    };

    for can in &cans {
        let local = &can.vertices;
        let induced = |r: usize| -> Vec<usize> {
            let mut out: Vec<usize> = local
                .iter()
                .enumerate()
                .filter(|&(_, &j)| g_adjacent(&vertices[local[r]], &vertices[j]))
                .map(|(s, _)| s)
                .collect();
            out.sort_unstable();
            out
        };
        if can.can_type == 0 {
            let order = hamiltonian_walk(local.len() / 10, |b| {
                let v = &vertices[local[b * 10]];
                let mut out: Vec<usize> = (0..local.len() / 10)
                    .filter(|&c| {
                        let w = &vertices[local[c * 10]];
                        (v.lamp == w.lamp && hex_adjacent(v.site, w.site))
                            || (v.site == w.site && lamp_neighbors(&v.lamp).contains(&w.lamp))
                    })
                    .collect();
                out.sort_unstable();
                out
            });
            for w in order.windows(2) {
                add(&mut adj, local[w[0]], local[w[1]]);
            }
        } else {
            match mode {
                Mode::FullInterior => {
                    for r in 0..local.len() {
                        for s in induced(r) {
                            if s > r {
                                add(&mut adj, local[r], local[s]);
                            }
                        }
                    }
                }
                Mode::SpanningTree => {
                    let mut seen = vec![false; local.len()];
                    seen[0] = true;
                    let mut queue = VecDeque::from([0]);
                    while let Some(r) = queue.pop_front() {
                        for s in induced(r) {
                            if !seen[s] {
                                seen[s] = true;
                                add(&mut adj, local[r], local[s]);
                                queue.push_back(s);
                            }
                        }
                    }
                }
            }
        }
    }

    // Inter-can edges.
    for ci in 0..cans.len() {
        let (cluster, class) = (cans[ci].cluster, cans[ci].class.clone());
        let capped = perc.height[cluster] > top;
        let parent_cluster = perc.parent[cluster].filter(|&p| !perc.clusters[p].boundary);
        cans[ci].frontier = capped || parent_cluster.is_none();
        let Some(pc) = parent_cluster else { continue };
        let first = &vertices[cans[ci].vertices[0]].lamp;
        let pclass = class_key(first, level_of(pc), &alpha, &block_len);
        let pi = can_index[&(pc, pclass)];
        let mut members: Vec<LampElement> = Vec::new();
        for &i in &cans[ci].vertices {
            if !members.contains(&vertices[i].lamp) {
                members.push(vertices[i].lamp.clone());
            }
        }
        members.sort_by_key(|e| member_rank(e, &class));
        let mut candidates = Vec::new();
        for &(x, y) in &perc.clusters[cluster].sites {
            let mut outside: Vec<(i32, i32)> = OFFSETS
                .iter()
                .map(|&(dx, dy)| (x + dx, y + dy))
                .filter(|&(u, v)| perc.inside(u, v) && perc.at(u, v) == pc)
                .collect();
            outside.sort_by_key(|&(u, v)| (v, u));
            for (u, v) in outside {
                for m in &members {
                    for k in 1..=10 {
                        for k2 in 1..=10 {
                            candidates.push((
                                GVertex::new(Site::new(x, y), m.clone(), k),
                                GVertex::new(Site::new(u, v), m.clone(), k2),
                            ));
                        }
                    }
                }
            }
        }
        let tag = format!("edge:{}:{}", cans[ci].name, cans[pi].name);
        let pick = KeyedRng::new(derive_key(key, &tag)).below(candidates.len() as u64) as usize;
        let (a, b) = &candidates[pick];
        let (a, b) = (index[a], index[b]);
        assert_eq!(can_of[b], pi);
        add(&mut adj, a, b);
        cans[ci].parent = Some(pi);
        cans[ci].up_edge = Some((a, b));
    }
    for list in &mut adj {
        list.sort_unstable();
    }

    Ok(EagerWindow { perc, alpha, block_len, vertices, index, adj, can_of, cans })
}

/// Closed Euler walk of a breadth-first spanning tree on `n` base vertices
/// (final return dropped), expanded into fibre runs; returns positions
/// `base * 10 + fibre - 1`.
fn hamiltonian_walk(n: usize, neighbors: impl Fn(usize) -> Vec<usize>) -> Vec<usize> {
    let mut children = vec![Vec::new(); n];
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = VecDeque::from([0]);
    while let Some(b) = queue.pop_front() {
        for c in neighbors(b) {
            if !seen[c] {
                seen[c] = true;
                children[b].push(c);
                queue.push_back(c);
            }
        }
    }
    assert!(seen.iter().all(|&s| s), "base graph of a can is disconnected");

    fn walk(v: usize, children: &[Vec<usize>], out: &mut Vec<usize>) {
        for &c in &children[v] {
            out.push(c);
            walk(c, children, out);
            out.push(v);
        }
    }
    let mut tour = vec![0];
    walk(0, &children, &mut tour);
    if n > 1 {
        tour.pop();
    }
    let mut count = vec![0usize; n];
    for &v in &tour {
        count[v] += 1;
    }
    let mut used = vec![0usize; n];
    let mut out = Vec::new();
    for &v in &tour {
        let run = if used[v] == 0 { 11 - count[v] } else { 1 };
        for f in used[v]..used[v] + run {
            out.push(v * 10 + f);
        }
        used[v] += run;
    }
    out
}

impl EagerWindow {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn neighbors_of(&self, v: &GVertex) -> Option<Vec<GVertex>> {
        let i = *self.index.get(v)?;
        let mut out: Vec<GVertex> = self.adj[i].iter().map(|&j| self.vertices[j].clone()).collect();
        out.sort();
        Some(out)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn can_of_vertex(&self, v: &GVertex) -> Option<&RefCan> {
        self.index.get(v).map(|&i| &self.cans[self.can_of[i]])
    }
}

/// Distances from `root` in the window, optionally with one edge removed.
pub fn brute_bfs(w: &EagerWindow, root: &GVertex, without: Option<(usize, usize)>) -> Result<Vec<Option<u32>>, RefError> {
    let &r = w.index.get(root).ok_or_else(|| RefError::RootMissing(root.clone()))?;
    let mut dist = vec![None; w.vertices.len()];
    dist[r] = Some(0);
    let mut queue = VecDeque::from([r]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v].unwrap();
        for &u in &w.adj[v] {
            if without.is_some_and(|(a, b)| (a, b) == (v, u) || (b, a) == (v, u)) {
                continue;
            }
            if dist[u].is_none() {
                dist[u] = Some(d + 1);
                queue.push_back(u);
            }
        }
    }
    Ok(dist)
}

/// Ball volumes up to the first radius holding a vertex of a frontier can
/// (capped, or with its parent in the boundary region), or up to `max_radius`.
pub fn truncated_volumes(w: &EagerWindow, dist: &[Option<u32>], max_radius: u32) -> (Vec<u64>, Option<u32>) {
    let root = dist.iter().position(|d| *d == Some(0)).unwrap();
    if w.cans[w.can_of[root]].frontier {
        return (vec![1], Some(0));
    }
    let far = dist.iter().flatten().copied().max().unwrap_or(0);
    let mut volumes = vec![1u64];
    for r in 1..=max_radius.min(far + 1) {
        let layer: Vec<usize> = (0..dist.len()).filter(|&i| dist[i] == Some(r)).collect();
        volumes.push(volumes.last().unwrap() + layer.len() as u64);
        if layer.iter().any(|&i| w.cans[w.can_of[i]].frontier) {
            return (volumes, Some(r));
        }
        if layer.is_empty() {
            break;
        }
    }
    (volumes, None)
}
