//! Portable deterministic random streams.
//!
//! All randomness in the engine (split shuffles, flip cell selection,
//! Gaussian noise, permutation-importance shuffles) is drawn from
//! SplitMix64 so that fold plans and perturbed matrices can be reproduced
//! bit-for-bit by any implementation:
//!
//! ```text
//! state = state + 0x9E3779B97F4A7C15            (wrapping)
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9       (wrapping)
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB       (wrapping)
//! return z ^ (z >> 31)
//! ```
//!
//! Derived values:
//!
//! - uniform f64 in [0,1): `(next >> 11) * 2^-53`
//! - bounded integer in [0, n): rejection sampling on the top of the 64-bit
//!   range (`zone = u64::MAX - u64::MAX % n`), then `x % n`
//! - shuffle: Fisher-Yates from the last index down, `j = below(i + 1)`
//! - standard normal: Box-Muller, `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)`,
//!   one draw per pair of uniforms (the sine branch is discarded)

/// SplitMix64 generator (64-bit state).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Stream for a sub-task, e.g. one perturbation condition or one
    /// (feature, repeat) shuffle. Distinct tags give unrelated streams.
    pub fn derive(seed: u64, tags: &[u64]) -> Self {
        let mut h = SplitMix64::new(seed);
        let mut acc = h.next_u64();
        for &t in tags {
            let mut m = SplitMix64::new(acc ^ t.wrapping_mul(0xD1B5_4A32_D192_ED03));
            acc = m.next_u64();
        }
        SplitMix64::new(acc)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. `n` must be positive.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
