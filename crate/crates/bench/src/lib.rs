//! Shared fixtures for the criterion benches.

use reid_core::synth::{generate_synthetic, SynthSpec};
use reid_core::{Dataset, RngHandle};

/// Small default-sized synthetic dataset.
pub fn dataset(identities: usize) -> Dataset {
    generate_synthetic(&SynthSpec {
        identities,
        ..SynthSpec::default()
    })
    .expect("valid spec")
    .dataset
}

/// `n` vectors of length `dim` with standard normal entries.
pub fn gaussian_rows(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = RngHandle::new(seed);
    (0..n).map(|_| (0..dim).map(|_| rng.normal()).collect()).collect()
}

/// Difference pairs with per-axis scales `sigma`, paired against zero.
pub fn scaled_pairs(n: usize, sigma: f64, dim: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    gaussian_rows(n, dim, seed)
        .into_iter()
        .map(|v| (v.into_iter().map(|x| sigma * x).collect(), vec![0.0; dim]))
        .collect()
}
