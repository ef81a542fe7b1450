//! Shared inputs for the stage benchmarks.

use mdmsc_core::{generate_synthetic, Dataset, SyntheticKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Four Gaussian blobs scaled into the unit square.
pub fn blobs(n: usize) -> Dataset {
    generate_synthetic(SyntheticKind::Blobs { components: 4 }, n, 1.0, 0)
        .expect("valid generator arguments")
        .normalize_minmax()
}

pub fn spirals(n: usize) -> Dataset {
    generate_synthetic(SyntheticKind::TwoSpirals, n, 0.0, 0).expect("valid generator arguments")
}

/// Random symmetric `m x m` matrix, row-major.
pub fn symmetric(m: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v = rng.random_range(-1.0..1.0);
            a[i * m + j] = v;
            a[j * m + i] = v;
        }
    }
    a
}
