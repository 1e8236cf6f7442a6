//! Counter-based random draws.
//!
//! Every draw is a pure function of `(seed, stream, index)`, so per-pixel
//! work can run in any order (or in parallel) and still reproduce the same
//! values. The mixer is the SplitMix64 finalizer applied to a keyed counter.

use std::f64::consts::TAU;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Operation ids used to separate random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    SceneLayout = 1,
    SceneTexture = 2,
    DegradeNoise = 3,
    Sparsify = 4,
    Proposal = 5,
    RandomTimestep = 6,
    Experiment = 7,
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent 64-bit seed from a parent seed and a tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix64(mix64(seed ^ GOLDEN).wrapping_add(tag.wrapping_mul(GOLDEN)))
}

/// Stable 64-bit tag for a string (FNV-1a), used to key per-scene streams.
pub fn tag_of(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64, stream: Stream) -> Self {
        Self {
            key: derive_seed(seed, stream as u64),
        }
    }

    pub fn seed(&self) -> u64 {
        self.key
    }

    #[inline]
    pub fn u64_at(&self, index: u64, lane: u64) -> u64 {
        let ctr = index.wrapping_mul(2).wrapping_add(lane & 1);
        mix64(self.key ^ mix64(ctr.wrapping_add(GOLDEN)))
    }

    /// Uniform in the open interval (0, 1).
    #[inline]
    pub fn uniform_at(&self, index: u64, lane: u64) -> f64 {
        ((self.u64_at(index, lane) >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller on two keyed uniforms.
    #[inline]
    pub fn normal_at(&self, index: u64) -> f64 {
        let u1 = self.uniform_at(index, 0);
        let u2 = self.uniform_at(index, 1);
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    pub fn normal_field(&self, len: usize) -> Vec<f64> {
        (0..len as u64).map(|i| self.normal_at(i)).collect()
    }

    /// Integer in `lo..=hi`.
    pub fn range_at(&self, index: u64, lo: usize, hi: usize) -> usize {
        debug_assert!(lo <= hi);
        let span = (hi - lo + 1) as f64;
        lo + ((self.uniform_at(index, 0) * span) as usize).min(hi - lo)
    }
}
