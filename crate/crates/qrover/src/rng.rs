//! Seedable deterministic PRNG.
//!
//! All stochastic behavior in the crate (random noise placement, finite-shot
//! sampling, data generation, training shuffles) draws from [`SplitMix64`], a
//! tiny PRNG with a fully documented state-advance rule, so that identical
//! seeds reproduce identical byte-level results across platforms and across
//! language re-implementations.
//!
//! State advance (splitmix64, Steele/Lea/Flood 2014):
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z  = state
//! z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
//! z ^= z >> 27;  z *= 0x94D049BB133111EB
//! z ^= z >> 31
//! output = z
//! ```
//!
//! `next_f64` maps the top 53 bits of `next_u64` to `[0, 1)` as
//! `(x >> 11) * 2^-53`.

/// Splitmix-style 64-bit PRNG with a single `u64` state word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    /// Create a generator seeded with `seed`.
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Advance the state and return the next 64-bit output.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform double in `[0, 1)` using the top 53 bits of `next_u64`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform double in the half-open interval `(0, hi]`.
    ///
    /// Computed as `hi * (1 - u)` with `u ∈ [0, 1)`, so the result can equal
    /// `hi` but never `0`.
    pub fn next_f64_open_closed(&mut self, hi: f64) -> f64 {
        hi * (1.0 - self.next_f64())
    }

    /// Uniform double in `[lo, hi)`.
    pub fn next_f64_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)` via scaled-double truncation.
    ///
    /// `n` must be nonzero and small enough (`≤ 2^53`) that the scaling is
    /// exact; every caller in this crate draws from ranges of at most a few
    /// thousand.
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let i = (self.next_f64() * n as f64) as usize;
        i.min(n - 1)
    }

    /// Two independent standard normal deviates via Box–Muller.
    pub fn next_gaussian_pair(&mut self) -> (f64, f64) {
        // u must be strictly positive for the logarithm.
        let u = 1.0 - self.next_f64();
        let v = self.next_f64();
        let r = (-2.0 * u.ln()).sqrt();
        let phi = 2.0 * std::f64::consts::PI * v;
        (r * phi.cos(), r * phi.sin())
    }

    /// One standard normal deviate (discards the pair's second element).
    pub fn next_gaussian(&mut self) -> f64 {
        self.next_gaussian_pair().0
    }

    /// Fisher–Yates shuffle of `items`, deterministic given the seed state.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_index(i + 1);
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference outputs computed by hand-evaluating the documented state
    /// advance for seed 0 (first three outputs of splitmix64).
    #[test]
    fn known_answer_seed_zero() {
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn f64_in_unit_interval() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..10_000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn open_closed_never_zero() {
        let mut rng = SplitMix64::new(9);
        for _ in 0..10_000 {
            let x = rng.next_f64_open_closed(0.1);
            assert!(x > 0.0 && x <= 0.1);
        }
    }

    #[test]
    fn index_covers_range() {
        let mut rng = SplitMix64::new(3);
        let mut seen = [false; 5];
        for _ in 0..1000 {
            seen[rng.next_index(5)] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn gaussian_moments_roughly_standard() {
        let mut rng = SplitMix64::new(11);
        let n = 50_000;
        let samples: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }
}
