//! Deterministic uniform stream for inverse-CDF sampling.
//!
//! The generator is pinned so sampled datasets are reproducible bit-for-bit
//! from a seed alone, independent of platform or external crates. Stream
//! definition ("splitmix64/u53, v1"):
//!
//! * state update: `z += 0x9E3779B97F4A7C15` (wrapping),
//! * output mix: `r ^= r >> 30; r *= 0xBF58476D1CE4E5B9; r ^= r >> 27;
//!   r *= 0x94D049BB133111EB; r ^= r >> 31`,
//! * unit interval: `u = ((r >> 11) + 0.5) / 2^53`, which lies strictly
//!   inside (0, 1) so it is always a valid quantile argument.

/// SplitMix64 with a fixed 53-bit uniform mapping.
#[derive(Debug, Clone)]
pub struct UniformStream {
    state: u64,
}

impl UniformStream {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut r = self.state;
        r = (r ^ (r >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        r = (r ^ (r >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        r ^ (r >> 31)
    }

    /// Next uniform draw in the open interval (0, 1).
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }
}
