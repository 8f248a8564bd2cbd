use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::Projection;

/// `rank x dim` matrix of independent standard normal entries.
pub fn random_projection(rank: usize, dim: usize, seed: u64) -> Projection {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let matrix: Vec<f32> = (0..rank * dim)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    Projection::new(matrix, rank, dim).expect("shape is consistent by construction")
}

/// `cos(π h / r)` where `h` counts coordinates of different sign.
pub fn hamming_cosine(px: &[f64], py: &[f64]) -> f64 {
    super::estimate_cosine(super::AngleEstimator::SignedHash, px, py)
}

/// Random-hyperplane angle estimate of `x` and `y` under `projection`.
pub fn rplsh_estimator(x: &[f64], y: &[f64], projection: &Projection) -> f64 {
    hamming_cosine(&projection.project_f64(x), &projection.project_f64(y))
}
