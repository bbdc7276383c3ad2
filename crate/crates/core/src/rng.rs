//! Counter-based random streams.
//!
//! Every random decision in this crate is a pure function of
//! (seed, round, purpose, index): there is no mutable generator state, so
//! per-edge decisions can be evaluated in any order -- or in parallel -- and
//! the results never change. Rerunning with the same seed reproduces every
//! byte of output.

/// What a stream draw is used for. Keeping purposes distinct guarantees that
/// e.g. the edge-sampling coin for edge 7 never collides with its equalizing
/// flip.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Per-edge inclusion sampling (the nibble's E_0, the sparsifier's E_0,
    /// random weighted decrease).
    EdgeSample = 1,
    /// The nibble's per-edge equalizing coin flip.
    Flip = 2,
    /// Per-vertex degree trimming choices (bipartite preprocessing).
    Trim = 3,
    /// Finisher draws: initial assignment and resampling.
    Assign = 4,
    /// Instance generation in tests and auxiliary sampling.
    Aux = 5,
}

/// SplitMix64 finalizer: a full-avalanche bijection on u64.
#[inline]
#[must_use]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A keyed, stateless stream. Cheap to copy; draws are pure functions of the
/// key and the caller-supplied index.
#[derive(Debug, Clone, Copy)]
pub struct Stream {
    key: u64,
}

impl Stream {
    /// Stream for one (seed, round, purpose) context.
    #[must_use]
    pub fn new(seed: u64, round: u64, purpose: Purpose) -> Self {
        // Fold the key words through the finalizer one at a time; each word is
        // diffused before the next enters, so (a,b) and (b,a) differ.
        let k = mix64(mix64(mix64(seed) ^ round) ^ purpose as u64);
        Stream { key: k }
    }

    /// The raw 64-bit draw for `index`.
    #[inline]
    #[must_use]
    pub fn bits(&self, index: u64) -> u64 {
        mix64(self.key ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
    }

    /// Uniform in [0, 1), 53-bit resolution.
    #[inline]
    #[must_use]
    pub fn uniform(&self, index: u64) -> f64 {
        (self.bits(index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli(p) coin for `index`. p outside [0,1] is clamped.
    #[inline]
    #[must_use]
    pub fn bernoulli(&self, index: u64, p: f64) -> bool {
        self.uniform(index) < p
    }

    /// Uniform draw from 0..n (n >= 1). Uses 64-bit multiply-shift reduction;
    /// the modulo bias at our n (< 2^32) is below 2^-32 and irrelevant here,
    /// but multiply-shift avoids it anyway for the low half.
    #[inline]
    #[must_use]
    pub fn below(&self, index: u64, n: u64) -> u64 {
        debug_assert!(n >= 1);
        ((self.bits(index) as u128 * n as u128) >> 64) as u64
    }
}

/// Derives a per-round seed from a master seed. Used by multi-round drivers so
/// each round's streams are keyed independently of what earlier rounds drew.
#[must_use]
pub fn round_seed(master: u64, round: u64) -> u64 {
    mix64(mix64(master) ^ round.wrapping_mul(0xa076_1d64_78bd_642f))
}
