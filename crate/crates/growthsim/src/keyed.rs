//! Keyed deterministic randomness.
//!
//! Every random decision in a realization is a pure function of a master key
//! and a canonical tag string, so that lazily exploring the graph in any order
//! reproduces the same realization. The contract is bit-exact:
//!
//! * `derive_key(seed, tag) = mix64(seed ^ fnv1a64(tag))`, where `mix64` is the
//!   SplitMix64 output finalizer.
//! * A [`KeyedRng`] started from a key advances its state by the SplitMix64
//!   increment `0x9e3779b97f4a7c15` and returns `mix64(state)` per draw.
//! * `below(n)` rejects draws under `2^64 mod n` and returns `draw % n`.
//! * `unit()` maps the top 53 bits of a draw onto `[0, 1)`.
//!
//! Tag grammar used across the crate:
//! `perc:<x>:<y>`, `offset:<i>`, `edge:<child-can-id>:<parent-can-id>`,
//! `run:<r>`, `resample:<j>`.

const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// 64-bit FNV-1a over the UTF-8 bytes of `s`.
pub fn fnv1a64(s: &str) -> u64 {
    s.bytes().fold(FNV_OFFSET_BASIS, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_key(master_seed: u64, tag: &str) -> u64 {
    mix64(master_seed ^ fnv1a64(tag))
}

/// SplitMix64 stream seeded from a derived key.
#[derive(Debug, Clone)]
pub struct KeyedRng {
    state: u64,
}

impl KeyedRng {
    pub fn new(key: u64) -> Self {
        Self { state: key }
    }

    /// Stream for `derive_key(master_seed, tag)`.
    pub fn for_tag(master_seed: u64, tag: &str) -> Self {
        Self::new(derive_key(master_seed, tag))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform integer in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0) has no outcomes");
        let reject_under = n.wrapping_neg() % n;
        loop {
            let x = self.next_u64();
            if x >= reject_under {
                return x % n;
            }
        }
    }

    /// Uniform float in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `true` with probability `p`; exact at `p = 0` and `p = 1`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}
