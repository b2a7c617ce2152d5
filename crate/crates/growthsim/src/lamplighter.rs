//! The lamplighter group `Z₂ ≀ Z`, its Cayley adjacency, and the random nested
//! block partitions of the integers and of the group.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keyed::KeyedRng;

/// A group element: the finite set of lit lamps and the marker position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LampElement {
    lamps: Vec<i64>,
    pub marker: i64,
}

impl LampElement {
    pub fn new(lamps: impl IntoIterator<Item = i64>, marker: i64) -> Self {
        let mut lamps: Vec<i64> = lamps.into_iter().collect();
        lamps.sort_unstable();
        lamps.dedup();
        Self { lamps, marker }
    }

    pub fn identity() -> Self {
        Self { lamps: Vec::new(), marker: 0 }
    }

    /// Lit lamp positions, sorted and duplicate-free.
    pub fn lamps(&self) -> &[i64] {
        &self.lamps
    }

    pub fn is_lit(&self, position: i64) -> bool {
        self.lamps.binary_search(&position).is_ok()
    }

    /// Flips the lamp under the marker.
    pub fn toggled(&self) -> Self {
        let mut lamps = self.lamps.clone();
        match lamps.binary_search(&self.marker) {
            Ok(i) => {
                lamps.remove(i);
            }
            Err(i) => lamps.insert(i, self.marker),
        }
        Self { lamps, marker: self.marker }
    }

    pub fn shifted(&self, by: i64) -> Self {
        Self { lamps: self.lamps.clone(), marker: self.marker + by }
    }
}

/// Cayley neighbours under the generating set {toggle, shift +1, shift −1}.
pub fn lamplighter_neighbors(e: &LampElement) -> [LampElement; 3] {
    [e.toggled(), e.shifted(1), e.shifted(-1)]
}

/// The sampled offsets and block lengths of the nested partitions. Levels are
/// 1-based in the accessors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSystem {
    pub c_seq: Vec<u64>,
    pub x_seq: Vec<u64>,
    pub alpha: Vec<i64>,
    pub block_len: Vec<u64>,
}

impl PartitionSystem {
    /// Builds the system from explicit draws `X_i ∈ {1..c_i}`.
    ///
    /// Panics if a draw is out of range or a block length overflows `i64`.
    pub fn from_draws(c_seq: Vec<u64>, x_seq: Vec<u64>) -> Self {
        assert_eq!(c_seq.len(), x_seq.len());
        let mut alpha = Vec::with_capacity(c_seq.len());
        let mut block_len = Vec::with_capacity(c_seq.len());
        let mut prev_len: i64 = 1;
        let mut acc: i64 = 0;
        for (&c, &x) in c_seq.iter().zip(&x_seq) {
            assert!(c >= 1 && (1..=c).contains(&x), "X_i must lie in 1..=c_i");
            acc = (x as i64)
                .checked_mul(prev_len)
                .and_then(|t| t.checked_add(acc))
                .expect("offset overflows i64");
            prev_len = prev_len.checked_mul(c as i64).expect("block length overflows i64");
            alpha.push(acc);
            block_len.push(prev_len as u64);
        }
        Self { c_seq, x_seq, alpha, block_len }
    }

    pub fn levels(&self) -> usize {
        self.c_seq.len()
    }

    pub fn alpha(&self, level: usize) -> i64 {
        self.alpha[level - 1]
    }

    pub fn block_len(&self, level: usize) -> u64 {
        self.block_len[level - 1]
    }

    /// `b_i · 2^{b_i}`, saturating at `u128::MAX`.
    pub fn class_size(&self, level: usize) -> u128 {
        let b = self.block_len(level);
        if b >= 120 {
            return u128::MAX;
        }
        u128::from(b) << b
    }
}

/// Draws `X_i` uniformly from `{1..c_i}` with the stream of
/// `derive_key(key, "offset:<i>")`.
pub fn sample_offsets(c_seq: &[u64], key: u64) -> PartitionSystem {
    let x_seq = c_seq
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            assert!(c >= 1, "c_i must be positive");
            1 + KeyedRng::for_tag(key, &format!("offset:{}", i + 1)).below(c)
        })
        .collect();
    PartitionSystem::from_draws(c_seq.to_vec(), x_seq)
}

/// A block of consecutive integers `[start, start + len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    pub index: i64,
    pub start: i64,
    pub len: u64,
}

impl Block {
    pub fn end(&self) -> i64 {
        self.start + self.len as i64 - 1
    }

    pub fn contains(&self, k: i64) -> bool {
        k >= self.start && k <= self.end()
    }
}

/// The level-`level` block of `R_i` containing `k`.
pub fn r_block(k: i64, level: usize, ps: &PartitionSystem) -> Block {
    let b = ps.block_len(level) as i64;
    let index = (k - ps.alpha(level)).div_euclid(b);
    Block { index, start: ps.alpha(level) + index * b, len: b as u64 }
}

/// Identifies a class of the partition `P_i` of the group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PClassId {
    pub level: usize,
    pub block_index: i64,
    /// Lit lamps outside the block, sorted.
    pub external_lamps: Vec<i64>,
}

pub fn p_class_of(e: &LampElement, level: usize, ps: &PartitionSystem) -> PClassId {
    let block = r_block(e.marker, level, ps);
    PClassId {
        level,
        block_index: block.index,
        external_lamps: e.lamps.iter().copied().filter(|&l| !block.contains(l)).collect(),
    }
}

/// Enumerates a class: markers ascending over the block, and for each marker
/// the in-block lamp subsets by ascending bitmask (bit `j` is the lamp at
/// `block.start + j`).
pub fn p_class_members(cid: &PClassId, ps: &PartitionSystem, cap: u64) -> Result<Vec<LampElement>> {
    let size = ps.class_size(cid.level);
    if size > u128::from(cap) {
        return Err(Error::ClassTooLarge { size, cap });
    }
    let shape = ClassShape::new(cid, ps);
    Ok((0..shape.size()).map(|i| shape.member(i)).collect())
}

/// A class laid out for indexed access; member `i` is the element with
/// marker offset `i >> len` and in-block lamp mask `i & (2^len − 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClassShape {
    pub level: usize,
    pub block: Block,
    pub external_lamps: Vec<i64>,
}

impl ClassShape {
    /// Panics if the block is too long for bitmask indexing (more than 40
    /// positions); callers enforce a class-size cap well below that.
    pub fn new(cid: &PClassId, ps: &PartitionSystem) -> Self {
        let len = ps.block_len(cid.level);
        assert!(len <= 40, "block of length {len} cannot be enumerated");
        let start = ps.alpha(cid.level) + cid.block_index * len as i64;
        Self {
            level: cid.level,
            block: Block { index: cid.block_index, start, len },
            external_lamps: cid.external_lamps.clone(),
        }
    }

    pub fn id(&self) -> PClassId {
        PClassId {
            level: self.level,
            block_index: self.block.index,
            external_lamps: self.external_lamps.clone(),
        }
    }

    pub fn size(&self) -> usize {
        (self.block.len as usize) << self.block.len
    }

    pub fn member(&self, i: usize) -> LampElement {
        let len = self.block.len as usize;
        let offset = (i >> len) as i64;
        let mask = i & ((1 << len) - 1);
        let inner = (0..len).filter(|j| mask >> j & 1 == 1).map(|j| self.block.start + j as i64);
        LampElement::new(self.external_lamps.iter().copied().chain(inner), self.block.start + offset)
    }

    pub fn member_index(&self, e: &LampElement) -> Option<usize> {
        if !self.block.contains(e.marker) {
            return None;
        }
        let mut mask = 0usize;
        let mut external = self.external_lamps.iter();
        for &l in &e.lamps {
            if self.block.contains(l) {
                mask |= 1 << (l - self.block.start);
            } else if external.next() != Some(&l) {
                return None;
            }
        }
        if external.next().is_some() {
            return None;
        }
        let offset = (e.marker - self.block.start) as usize;
        Some((offset << self.block.len) | mask)
    }

    /// In-class Cayley neighbours of member `i`, ascending. Shifts leaving the
    /// block are dropped.
    pub fn neighbor_members(&self, i: usize, out: &mut Vec<usize>) {
        let len = self.block.len as usize;
        let offset = i >> len;
        out.clear();
        out.push(i ^ (1 << offset));
        if offset > 0 {
            out.push(i - (1 << len));
        }
        if offset + 1 < len {
            out.push(i + (1 << len));
        }
        out.sort_unstable();
    }

    /// Classes at `level` (not above this class's level) contained in this
    /// class, ordered by block and then by lamp subset.
    pub fn subclasses(&self, level: usize, ps: &PartitionSystem) -> Vec<PClassId> {
        let sub_len = ps.block_len(level);
        assert!(level <= self.level && self.block.len.is_multiple_of(sub_len));
        let mut out = Vec::new();
        let parts = self.block.len / sub_len;
        for part in 0..parts {
            let start = self.block.start + (part * sub_len) as i64;
            let sub = r_block(start, level, ps);
            debug_assert_eq!(sub.start, start);
            let free: Vec<i64> = (0..self.block.len as i64)
                .map(|j| self.block.start + j)
                .filter(|&p| !sub.contains(p))
                .collect();
            for mask in 0u64..(1u64 << free.len()) {
                let lit = free.iter().enumerate().filter(|(j, _)| mask >> j & 1 == 1).map(|(_, &p)| p);
                let mut external: Vec<i64> = self.external_lamps.iter().copied().chain(lit).collect();
                external.sort_unstable();
                out.push(PClassId { level, block_index: sub.index, external_lamps: external });
            }
        }
        out
    }
}
