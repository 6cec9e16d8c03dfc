//! Seeded randomness shared by splitting and frame sampling.
//!
//! Every draw in the pipeline goes through [`RngHandle`], which wraps
//! ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded from a 64-bit value. ChaCha8
//! output is specified bit-for-bit, so a seed reproduces the same stream on
//! every platform. Integer draws are made over `u64` ranges so that the
//! result does not depend on the width of `usize`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic pseudo-random source (ChaCha8, seeded from a `u64`).
#[derive(Debug, Clone)]
pub struct RngHandle {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngHandle {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Handle for an independent stream identified by `(self.seed, tags...)`.
    pub fn derive(&self, tags: &[u64]) -> Self {
        Self::new(derive_seed(self.seed, tags))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform `f64` in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        // 53 random mantissa bits.
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform `f64` in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal draw (Box-Muller).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform integer in `[0, n)`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        self.inner.random_range(0..n as u64) as usize
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct values from `[0, n)`, sorted ascending. Panics if `k > n`.
    pub fn sample_distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot draw {k} distinct values from {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool.sort_unstable();
        pool
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed for `(seed, tags...)`; stable across runs and platforms.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix(seed), |acc, &t| mix(acc ^ mix(t)))
}

/// Stable 64-bit hash of a string label (FNV-1a), for deriving per-item seeds.
pub fn label_tag(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_seeds_give_equal_streams() {
        let mut a = RngHandle::new(42);
        let mut b = RngHandle::new(42);
        for _ in 0..10_000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn pinned_first_draws() {
        // Frozen from ChaCha8 seeded with 0; guards against generator swaps.
        let mut r = RngHandle::new(0);
        let first: Vec<u64> = (0..3).map(|_| r.next_u64()).collect();
        assert_eq!(first, [13080132717333068652, 8594738769458413623, 12896916468484187878]);
        assert_eq!(derive_seed(1, &[label_tag("trial"), 0]), 7055494175092356525);
    }

    #[test]
    fn derived_streams_differ() {
        let base = RngHandle::new(7);
        assert_ne!(derive_seed(7, &[0]), derive_seed(7, &[1]));
        assert_eq!(base.derive(&[3, 4]).seed(), base.derive(&[3, 4]).seed());
        assert_ne!(base.derive(&[3, 4]).seed(), base.derive(&[4, 3]).seed());
    }

    #[test]
    fn sample_distinct_is_sorted_and_unique() {
        let mut r = RngHandle::new(1);
        for k in 0..=20 {
            let s = r.sample_distinct(20, k);
            assert_eq!(s.len(), k);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&v| v < 20));
        }
    }

    #[test]
    fn uniform_range() {
        let mut r = RngHandle::new(9);
        for _ in 0..1000 {
            let u = r.uniform();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
