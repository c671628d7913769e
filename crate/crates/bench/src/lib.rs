//! Fixtures shared by the benchmarks.

use medmark_core::corpus::generate_image;
use medmark_core::{FeatureSet, ImageGray};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn phantom(size: usize) -> ImageGray {
    generate_image(42, 0, size)
}

pub fn random_features(n: usize, d: usize, seed: u64) -> FeatureSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| (0..d).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let ids = (0..n).map(|i| format!("f{i}")).collect();
    FeatureSet::new(rows, ids).expect("finite rows")
}
