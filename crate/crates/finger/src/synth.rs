//! Seeded Gaussian-mixture datasets.
//!
//! Cluster centers and within-cluster noise both scale dimension `i` by
//! `(i + 1)^-decay`, so the data has a decaying spectrum like real
//! embeddings. `decay = 0` gives isotropic clusters.

use finger_core::{Metric, Result, VectorSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MixtureSpec {
    pub dim: usize,
    pub clusters: usize,
    /// Standard deviation of cluster centers along the first dimension.
    pub center_scale: f32,
    /// Within-cluster standard deviation along the first dimension.
    pub noise_scale: f32,
    pub decay: f32,
    pub seed: u64,
}

impl Default for MixtureSpec {
    fn default() -> Self {
        Self {
            dim: 64,
            clusters: 16,
            center_scale: 4.0,
            noise_scale: 1.0,
            decay: 0.5,
            seed: 42,
        }
    }
}

pub struct Mixture {
    spec: MixtureSpec,
    scales: Vec<f32>,
    centers: Vec<f32>,
}

impl Mixture {
    pub fn new(spec: MixtureSpec) -> Self {
        assert!(
            spec.dim > 0 && spec.clusters > 0,
            "mixture needs dim and clusters"
        );
        let scales: Vec<f32> = (0..spec.dim)
            .map(|i| ((i + 1) as f32).powf(-spec.decay))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let centers = (0..spec.clusters * spec.dim)
            .map(|j| {
                rng.sample::<f32, _>(StandardNormal) * spec.center_scale * scales[j % spec.dim]
            })
            .collect();
        Self {
            spec,
            scales,
            centers,
        }
    }

    pub fn spec(&self) -> &MixtureSpec {
        &self.spec
    }

    /// `n` points from stream `stream`; distinct streams give independent
    /// samples from the same clusters.
    pub fn sample(&self, n: usize, stream: u64) -> Vec<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed);
        rng.set_stream(stream + 1);
        let m = self.spec.dim;
        let mut out = Vec::with_capacity(n * m);
        for _ in 0..n {
            let c = rng.random_range(0..self.spec.clusters);
            let center = &self.centers[c * m..(c + 1) * m];
            out.extend(center.iter().zip(&self.scales).map(|(&mu, &s)| {
                mu + rng.sample::<f32, _>(StandardNormal) * self.spec.noise_scale * s
            }));
        }
        out
    }

    pub fn vectors(&self, n: usize, stream: u64, metric: Metric) -> Result<VectorSet> {
        VectorSet::new(self.sample(n, stream), self.spec.dim, metric)
    }
}
