//! Deterministic, platform-independent random number generation.
//!
//! All stochastic steps in the crate (subject noise levels, pixel and label
//! noise, weight initialization, client selection) draw from [`DetRng`], a
//! xoshiro256++ generator seeded through SplitMix64. Gaussian variates use
//! the Box-Muller transform (two uniforms per draw, no rejection), with
//! `libm` for the transcendentals, so a given seed produces the same byte
//! stream on every platform.

/// xoshiro256++ with SplitMix64 seed expansion.
#[derive(Debug, Clone)]
pub struct DetRng {
    state: [u64; 4],
}

impl DetRng {
    /// Create a generator from a 64-bit seed.
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let mut state = [0u64; 4];
        for slot in &mut state {
            *slot = splitmix64(&mut sm);
        }
        Self { state }
    }

    /// Next raw 64-bit value.
    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1): 53 mantissa bits of the next output.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box-Muller (cosine branch).
    ///
    /// Consumes exactly two 64-bit outputs per call, so draw counts are
    /// fixed regardless of the values produced.
    pub fn normal(&mut self) -> f64 {
        // Shift u1 into (0, 1] so the log is finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        r * libm::cos(2.0 * std::f64::consts::PI * u2)
    }

    /// Normal with the given mean and standard deviation.
    pub fn normal_scaled(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.normal()
    }

    /// Uniform integer in [0, n) by rejection-free multiply-shift.
    ///
    /// The tiny modulo bias (< 2^-64 · n) is irrelevant for simulation use
    /// and keeps the draw count at one output per call.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let x = self.next_u64();
        ((x as u128 * n as u128) >> 64) as usize
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a master seed and a stream label.
///
/// Used to give every subject, round, and experiment cell its own
/// generator: `derive_seed(master, subject_id)`, `derive_seed(cell, round)`,
/// and so on. Two SplitMix64 steps decorrelate adjacent labels.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut s = master ^ stream.wrapping_mul(0xA24BAED4963EE407);
    let a = splitmix64(&mut s);
    splitmix64(&mut s) ^ a.rotate_left(17)
}
