use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    estimate_cosine, rplsh::random_projection, AngleEstimator, DistributionParams, FingerIndex,
};
use crate::linalg::{top_r_basis, GramAccumulator, Projection};
use crate::{Error, Result, SearchGraph, VectorSet};

/// Correlation target for automatic rank selection.
pub const AUTO_RANK_CORRELATION: f64 = 0.7;
/// Starting rank and increment for automatic rank selection.
pub const AUTO_RANK_STEP: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankChoice {
    Fixed(usize),
    /// Grow from 8 in steps of 8 until the estimated and true residual
    /// cosines correlate at 0.7 or better.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// Top singular directions of the sampled residuals.
    Svd,
    /// Gaussian random projection (data-oblivious baseline).
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerConfig {
    pub rank: RankChoice,
    pub basis: BasisKind,
    pub estimator: AngleEstimator,
    pub pairs_per_node: usize,
    /// Seed for neighbor-pair sampling.
    pub seed: u64,
}

impl Default for FingerConfig {
    fn default() -> Self {
        Self {
            rank: RankChoice::Auto,
            basis: BasisKind::Svd,
            estimator: AngleEstimator::Projected,
            pairs_per_node: 1,
            seed: 7,
        }
    }
}

impl FingerConfig {
    pub fn fixed(rank: usize) -> Self {
        Self {
            rank: RankChoice::Fixed(rank),
            ..Self::default()
        }
    }

    /// The random-hyperplane hashing baseline at `rank`.
    pub fn rplsh(rank: usize, seed: u64) -> Self {
        Self {
            rank: RankChoice::Fixed(rank),
            basis: BasisKind::Random { seed },
            estimator: AngleEstimator::SignedHash,
            ..Self::default()
        }
    }
}

/// A sampled pair of distinct neighbors of `center`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TrainingPair {
    pub center: u32,
    pub first: u32,
    pub second: u32,
}

/// Sampled neighbor pairs plus the Gram accumulator of their residuals.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub pairs: Vec<TrainingPair>,
    pub residuals: GramAccumulator,
    /// Nodes skipped because their vector has zero norm.
    pub zero_centers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub rank: usize,
    /// Pearson correlation between true and estimated training cosines.
    pub correlation: f64,
    /// Pairs contributing to the statistics (non-zero residuals).
    pub pairs_used: usize,
    pub pairs_sampled: usize,
    pub residual_samples: usize,
    pub zero_centers: usize,
    /// Fraction of residual energy inside the basis (SVD only).
    pub captured_energy: Option<f64>,
    /// Correlation at each rank tried, in order.
    pub rank_trace: Vec<(usize, f64)>,
}

/// Residual of `d` against center `c`: `d - (cᵀd / cᵀc) c`, with the
/// coefficient. Returns `None` for a zero-norm center.
pub fn residual(center: &[f32], d: &[f32]) -> Option<(f64, Vec<f64>)> {
    let cc = crate::metric::dot_f64(center, center);
    if cc <= 0.0 {
        return None;
    }
    let coeff = crate::metric::dot_f64(center, d) / cc;
    Some((
        coeff,
        d.iter()
            .zip(center)
            .map(|(&x, &c)| x as f64 - coeff * c as f64)
            .collect(),
    ))
}

fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

/// Samples neighbor pairs per node and accumulates one residual per sampled
/// pair (a node with a single neighbor contributes that neighbor's residual
/// and no pair).
pub fn collect_training_pairs(
    graph: &SearchGraph,
    dataset: &VectorSet,
    pairs_per_node: usize,
    seed: u64,
) -> Result<TrainingSet> {
    if graph.len() != dataset.len() {
        return Err(Error::GraphMismatch {
            graph: graph.len(),
            dataset: dataset.len(),
        });
    }
    if pairs_per_node == 0 {
        return Err(Error::InvalidParameter(
            "pairs_per_node must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut residuals = GramAccumulator::new(dataset.dim());
    let mut pairs = Vec::with_capacity(graph.len() * pairs_per_node);
    let mut zero_centers = 0;

    for c in 0..graph.len() as u32 {
        let neighbors = graph.base_neighbors(c);
        let center = dataset.row(c as usize);
        if neighbors.is_empty() {
            continue;
        }
        if crate::metric::sq_norm(center) <= 0.0 {
            zero_centers += 1;
            continue;
        }
        if neighbors.len() == 1 {
            let (_, r) = residual(center, dataset.row(neighbors[0] as usize)).unwrap();
            residuals.add(&to_f32(&r));
            continue;
        }
        for _ in 0..pairs_per_node {
            let i = rng.random_range(0..neighbors.len());
            let mut j = rng.random_range(0..neighbors.len() - 1);
            if j >= i {
                j += 1;
            }
            let (first, second) = (neighbors[i], neighbors[j]);
            let (_, r) = residual(center, dataset.row(first as usize)).unwrap();
            residuals.add(&to_f32(&r));
            pairs.push(TrainingPair {
                center: c,
                first,
                second,
            });
        }
    }
    Ok(TrainingSet {
        pairs,
        residuals,
        zero_centers,
    })
}

/// Population mean and standard deviation.
fn moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let (mx, sx) = moments(x);
    let (my, sy) = moments(y);
    if sx == 0.0 || sy == 0.0 {
        return 0.0;
    }
    let cov = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / x.len() as f64;
    cov / (sx * sy)
}

/// Fits the matching transform from true cosines `truth` and estimates
/// `approx`; returns the parameters and the Pearson correlation.
pub fn fit_distribution(truth: &[f64], approx: &[f64]) -> Result<(DistributionParams, f64)> {
    if truth.is_empty() || truth.len() != approx.len() {
        return Err(Error::Degenerate(alloc::format!(
            "need equal non-empty samples, got {} and {}",
            truth.len(),
            approx.len()
        )));
    }
    let (mu, sigma) = moments(truth);
    let (mu_hat, sigma_hat) = moments(approx);
    if sigma_hat <= 0.0 {
        return Err(Error::Degenerate(
            "estimated cosines have zero spread; use a larger rank".into(),
        ));
    }
    if sigma <= 0.0 {
        return Err(Error::Degenerate(
            "true residual cosines have zero spread".into(),
        ));
    }
    let mut params = DistributionParams {
        mu,
        sigma,
        mu_hat,
        sigma_hat,
        epsilon: 0.0,
    };
    params.epsilon = truth
        .iter()
        .zip(approx)
        .map(|(x, y)| libm::fabs(params.match_cosine(*y) - x))
        .sum::<f64>()
        / truth.len() as f64;
    Ok((params, pearson(truth, approx)))
}

/// Residual pairs of the training set, skipping pairs with a zero residual.
fn pair_residuals(dataset: &VectorSet, pairs: &[TrainingPair]) -> Vec<(Vec<f64>, Vec<f64>)> {
    pairs
        .iter()
        .filter_map(|p| {
            let c = dataset.row(p.center as usize);
            let (_, x) = residual(c, dataset.row(p.first as usize))?;
            let (_, y) = residual(c, dataset.row(p.second as usize))?;
            let nonzero = |v: &[f64]| v.iter().any(|&e| e != 0.0);
            (nonzero(&x) && nonzero(&y)).then_some((x, y))
        })
        .collect()
}

fn cosine_f64(x: &[f64], y: &[f64]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        ab += a * b;
        aa += a * a;
        bb += b * b;
    }
    crate::metric::cosine_from_parts(ab, aa, bb)
}

pub fn train_finger(
    graph: &SearchGraph,
    dataset: &VectorSet,
    config: &FingerConfig,
) -> Result<FingerIndex> {
    train_finger_with_report(graph, dataset, config).map(|(index, _)| index)
}

/// Trains the projection and distribution parameters on `graph`'s base layer
/// and precomputes all payloads.
pub fn train_finger_with_report(
    graph: &SearchGraph,
    dataset: &VectorSet,
    config: &FingerConfig,
) -> Result<(FingerIndex, TrainReport)> {
    if graph.dim() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: graph.dim(),
            found: dataset.dim(),
        });
    }
    let m = dataset.dim();
    let set = collect_training_pairs(graph, dataset, config.pairs_per_node, config.seed)?;
    if set.residuals.samples() == 0 {
        return Err(Error::Empty("graph has no edges to train on"));
    }
    let residual_pairs = pair_residuals(dataset, &set.pairs);
    if residual_pairs.is_empty() {
        return Err(Error::Degenerate(
            "no neighbor pair with non-zero residuals".into(),
        ));
    }
    let truth: Vec<f64> = residual_pairs
        .iter()
        .map(|(x, y)| cosine_f64(x, y))
        .collect();

    let full_basis = match config.basis {
        BasisKind::Svd => Some(top_r_basis(&set.residuals, m)?),
        BasisKind::Random { .. } => None,
    };
    let projection_at = |rank: usize| -> Result<Projection> {
        match (&full_basis, config.basis) {
            (Some(basis), _) => Ok(basis.truncated(rank)?.into_projection()),
            (None, BasisKind::Random { seed }) => Ok(random_projection(rank, m, seed)),
            (None, BasisKind::Svd) => unreachable!(),
        }
    };
    let evaluate = |projection: &Projection| -> Result<(DistributionParams, f64)> {
        let approx: Vec<f64> = residual_pairs
            .iter()
            .map(|(x, y)| {
                estimate_cosine(
                    config.estimator,
                    &projection.project_f64(x),
                    &projection.project_f64(y),
                )
            })
            .collect();
        fit_distribution(&truth, &approx)
    };

    let mut rank_trace = Vec::new();
    let (projection, dist, correlation) = match config.rank {
        RankChoice::Fixed(rank) => {
            if rank == 0 || rank > m {
                return Err(Error::InvalidParameter(alloc::format!(
                    "rank {rank} must be in 1..={m}"
                )));
            }
            let projection = projection_at(rank)?;
            let (dist, corr) = evaluate(&projection)?;
            rank_trace.push((rank, corr));
            (projection, dist, corr)
        }
        RankChoice::Auto => {
            let mut rank = AUTO_RANK_STEP.min(m);
            loop {
                let projection = projection_at(rank)?;
                let (dist, corr) = evaluate(&projection)?;
                rank_trace.push((rank, corr));
                if corr >= AUTO_RANK_CORRELATION || rank == m {
                    break (projection, dist, corr);
                }
                // Past the last multiple of the step, fall back to full rank.
                rank = if rank + AUTO_RANK_STEP <= m {
                    rank + AUTO_RANK_STEP
                } else {
                    m
                };
            }
        }
    };

    let index = build_payloads(graph, dataset, projection, config.estimator, dist)?;
    let report = TrainReport {
        rank: index.rank(),
        correlation,
        pairs_used: residual_pairs.len(),
        pairs_sampled: set.pairs.len(),
        residual_samples: set.residuals.samples(),
        zero_centers: set.zero_centers,
        captured_energy: full_basis
            .as_ref()
            .map(|b| b.truncated(index.rank()).unwrap().captured_energy()),
        rank_trace,
    };
    Ok((index, report))
}

fn build_payloads(
    graph: &SearchGraph,
    dataset: &VectorSet,
    projection: Projection,
    estimator: AngleEstimator,
    dist: DistributionParams,
) -> Result<FingerIndex> {
    let r = projection.rank();
    let n = graph.len();
    let mut nodes = vec![0.0f32; n * (r + 1)];
    for (c, slot) in nodes.chunks_exact_mut(r + 1).enumerate() {
        let row = dataset.row(c);
        slot[0] = crate::metric::sq_norm(row);
        projection.project_into(row, &mut slot[1..]);
    }

    let edge_total = crate::edge_count(graph);
    let mut edges = Vec::with_capacity(edge_total * (r + 2));
    for c in 0..n as u32 {
        let center = dataset.row(c as usize);
        for &d in graph.base_neighbors(c) {
            let neighbor = dataset.row(d as usize);
            match residual(center, neighbor) {
                Some((coeff, res)) => {
                    edges.push(coeff as f32);
                    edges.push(res.iter().map(|v| v * v).sum::<f64>() as f32);
                    edges.extend(projection.project_f64(&res).into_iter().map(|v| v as f32));
                }
                // Zero-norm centers are never approximated; keep the slot.
                None => edges.extend(core::iter::repeat_n(0.0f32, r + 2)),
            }
        }
    }
    FingerIndex::from_parts(
        graph,
        dataset.metric(),
        projection,
        estimator,
        dist,
        nodes,
        edges,
    )
}
