use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::train::residual;
use super::TrainingPair;
use crate::{Error, Result, SearchGraph, VectorSet};

/// Residuals of two neighbors against their shared center.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualPair {
    pub center: u32,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ResidualPair {
    /// True cosine of the two residuals.
    pub fn cosine(&self) -> f64 {
        let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
        for (a, b) in self.x.iter().zip(&self.y) {
            ab += a * b;
            aa += a * a;
            bb += b * b;
        }
        crate::metric::cosine_from_parts(ab, aa, bb)
    }
}

/// Samples `count` neighbor pairs uniformly over centers, skipping pairs in
/// `exclude` (in either order) and pairs with a zero residual.
pub fn sample_residual_pairs(
    graph: &SearchGraph,
    dataset: &VectorSet,
    count: usize,
    seed: u64,
    exclude: &[TrainingPair],
) -> Result<Vec<ResidualPair>> {
    if graph.len() != dataset.len() {
        return Err(Error::GraphMismatch {
            graph: graph.len(),
            dataset: dataset.len(),
        });
    }
    let excluded: BTreeSet<(u32, u32, u32)> = exclude
        .iter()
        .flat_map(|p| [(p.center, p.first, p.second), (p.center, p.second, p.first)])
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let max_attempts = count.saturating_mul(100).max(1000);
    for _ in 0..max_attempts {
        if out.len() == count {
            break;
        }
        let c = rng.random_range(0..graph.len()) as u32;
        let nbrs = graph.base_neighbors(c);
        if nbrs.len() < 2 {
            continue;
        }
        let i = rng.random_range(0..nbrs.len());
        let mut j = rng.random_range(0..nbrs.len() - 1);
        if j >= i {
            j += 1;
        }
        if excluded.contains(&(c, nbrs[i], nbrs[j])) {
            continue;
        }
        let center = dataset.row(c as usize);
        let (Some((_, x)), Some((_, y))) = (
            residual(center, dataset.row(nbrs[i] as usize)),
            residual(center, dataset.row(nbrs[j] as usize)),
        ) else {
            continue;
        };
        if x.iter().all(|&v| v == 0.0) || y.iter().all(|&v| v == 0.0) {
            continue;
        }
        out.push(ResidualPair { center: c, x, y });
    }
    if out.len() < count {
        return Err(Error::Degenerate(alloc::format!(
            "only {} of {count} residual pairs available",
            out.len()
        )));
    }
    Ok(out)
}

/// Mean relative error `|t - t̂| / |t|` of an angle estimator over `pairs`;
/// pairs with `|t| < 1e-12` are skipped.
pub fn approximation_error<F>(pairs: &[ResidualPair], mut estimate: F) -> f64
where
    F: FnMut(&ResidualPair) -> f64,
{
    let (mut total, mut used) = (0.0, 0usize);
    for pair in pairs {
        let t = pair.cosine();
        if libm::fabs(t) < 1e-12 {
            continue;
        }
        total += libm::fabs(t - estimate(pair)) / libm::fabs(t);
        used += 1;
    }
    if used == 0 {
        f64::NAN
    } else {
        total / used as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finger::{collect_training_pairs, train_finger, FingerConfig};
    use crate::{build_graph, GraphParams, Metric};
    use rand_distr::StandardNormal;

    fn setup() -> (SearchGraph, VectorSet) {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let data: Vec<f32> = (0..400 * 8).map(|_| rng.sample(StandardNormal)).collect();
        let data = VectorSet::new(data, 8, Metric::L2).unwrap();
        let graph = build_graph(
            &data,
            &GraphParams {
                max_degree: 6,
                ef_construction: 30,
                seed: 1,
            },
        )
        .unwrap();
        (graph, data)
    }

    #[test]
    fn held_out_pairs_avoid_training_pairs() {
        let (graph, data) = setup();
        let train = collect_training_pairs(&graph, &data, 1, 3).unwrap();
        let pairs = sample_residual_pairs(&graph, &data, 300, 4, &train.pairs).unwrap();
        assert_eq!(pairs.len(), 300);
        let c_first: BTreeSet<u32> = train.pairs.iter().map(|p| p.center).collect();
        assert!(pairs
            .iter()
            .all(|p| c_first.contains(&p.center) || graph.base_neighbors(p.center).len() >= 2));
    }

    #[test]
    fn full_rank_error_vanishes() {
        let (graph, data) = setup();
        let index = train_finger(&graph, &data, &FingerConfig::fixed(8)).unwrap();
        let pairs = sample_residual_pairs(&graph, &data, 200, 5, &[]).unwrap();
        let err = approximation_error(&pairs, |p| {
            index.estimate_residual_cosine(&p.x, &p.y, false)
        });
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn error_shrinks_with_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let m = 32;
        let data: Vec<f32> = (0..1500 * m)
            .map(|i| rng.sample::<f32, _>(StandardNormal) / (1.0 + (i % m) as f32 * 0.3))
            .collect();
        let data = VectorSet::new(data, m, Metric::L2).unwrap();
        let graph = build_graph(
            &data,
            &GraphParams {
                max_degree: 8,
                ef_construction: 40,
                seed: 1,
            },
        )
        .unwrap();
        let train = collect_training_pairs(&graph, &data, 1, 7).unwrap();
        let pairs = sample_residual_pairs(&graph, &data, 2000, 8, &train.pairs).unwrap();
        let errors: Vec<f64> = (1..=m)
            .map(|r| {
                let index = train_finger(&graph, &data, &FingerConfig::fixed(r)).unwrap();
                approximation_error(&pairs, |p| {
                    index.estimate_residual_cosine(&p.x, &p.y, false)
                })
            })
            .collect();
        let violations = errors.windows(2).filter(|w| w[1] > w[0]).count();
        assert!(violations * 20 < errors.len(), "{errors:?}");
        assert!(errors[m - 1] < 1e-5);
    }

    #[test]
    fn impossible_request_is_reported() {
        let graph =
            SearchGraph::from_adjacency(alloc::vec![alloc::vec![1], alloc::vec![0]], 0, 1).unwrap();
        let data = VectorSet::new(alloc::vec![1.0, 2.0], 1, Metric::L2).unwrap();
        assert!(matches!(
            sample_residual_pairs(&graph, &data, 5, 0, &[]),
            Err(Error::Degenerate(_))
        ));
    }
}
