//! Deterministic per-path random streams.
//!
//! Every source of randomness in this crate is a [`PathStream`] derived
//! from a [`RunSeed`] `(master_seed, path_index)`.  The derivation is a
//! fixed 64-bit avalanche mix, so any path's stream can be constructed
//! independently of all others: parallel ensembles are reproducible
//! regardless of scheduling, and identical on every platform and thread
//! count.
//!
//! The construction, bit for bit:
//!
//! 1. **Path key.** `key = mix64(master_seed + (path_index + 1) · GAMMA)`
//!    with `GAMMA = 0x9E3779B97F4A7C15` and `mix64` the SplitMix64
//!    finalizer
//!    ```text
//!    z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!    z ^= z >> 27; z *= 0x94D049BB133111EB;
//!    z ^= z >> 31;
//!    ```
//!    (all arithmetic mod 2⁶⁴).  This is exactly output number
//!    `path_index` of a SplitMix64 generator seeded with `master_seed`.
//! 2. **Generator state.** The xoshiro256++ state is the next four
//!    SplitMix64 outputs after `key`:
//!    `s[j] = mix64(key + (j + 1) · GAMMA)` for `j = 0..4`.
//! 3. **Uniforms.** `u64 → [0, 1)` by `(w >> 11) · 2⁻⁵³`.
//! 4. **Normals.** Marsaglia's polar variant of the Box–Muller transform:
//!    draw `(u, v)` uniform on `[−1, 1)²` (two `u64`s per attempt), reject
//!    unless `0 < s = u² + v² < 1`, then return `u·√(−2 ln s / s)` and
//!    cache `v·√(−2 ln s / s)` for the following call.
//!
//! Changing any of these choices invalidates the golden values frozen in
//! the test suite; none of them may drift.

use serde::{Deserialize, Serialize};

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a fixed 64-bit avalanche permutation.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Identifies one path's random stream within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunSeed {
    pub master_seed: u64,
    pub path_index: u64,
}

impl RunSeed {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        RunSeed { master_seed, path_index }
    }

    /// The 64-bit path key described in the module docs.
    pub fn path_key(&self) -> u64 {
        mix64(
            self.master_seed
                .wrapping_add(GAMMA.wrapping_mul(self.path_index.wrapping_add(1))),
        )
    }
}

/// xoshiro256++ generator with a cached spare normal draw.
#[derive(Debug, Clone)]
pub struct PathStream {
    state: [u64; 4],
    spare_normal: Option<f64>,
}

/// Construct the deterministic stream for `(master_seed, path_index)`.
pub fn derive_stream(seed: RunSeed) -> PathStream {
    let key = seed.path_key();
    let mut state = [0u64; 4];
    for (j, s) in state.iter_mut().enumerate() {
        *s = mix64(key.wrapping_add(GAMMA.wrapping_mul(j as u64 + 1)));
    }
    // The all-zero state is a fixed point of xoshiro256++; the avalanche
    // mix cannot practically produce it, but guard anyway.
    if state == [0, 0, 0, 0] {
        state[0] = GAMMA;
    }
    PathStream { state, spare_normal: None }
}

impl PathStream {
    /// Test-only constructor from raw state (reference-vector checks).
    #[cfg(test)]
    fn from_raw_state(state: [u64; 4]) -> Self {
        PathStream { state, spare_normal: None }
    }

    /// Next raw 64-bit output (xoshiro256++).
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        (self.next_u64() >> 11) as f64 * SCALE
    }

    /// Standard normal draw (polar Box–Muller, see module docs).
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.next_uniform() - 1.0;
            let v = 2.0 * self.next_uniform() - 1.0;
            let s = u * u + v * v;
            if s >= 1.0 || s == 0.0 {
                continue;
            }
            let m = (-2.0 * s.ln() / s).sqrt();
            self.spare_normal = Some(v * m);
            return u * m;
        }
    }
}
