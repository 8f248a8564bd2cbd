//! Low-rank residual angle estimation for graph search.
//!
//! When the search expands a node `c`, the query `q` and each neighbor `d` are
//! split into a component along `c` and a residual orthogonal to it. Every
//! term of `‖q - d‖²` except `q_resᵀ d_res` is then available from scalars
//! precomputed per node and per edge plus the already known score of `c`.
//! The remaining term is estimated as `‖q_res‖ ‖d_res‖ t`, with `t` the cosine
//! of the two residuals measured in a rank-`r` projection. The projection is
//! learned from sampled neighbor residuals (top singular directions), and
//! the projected cosines are affinely mapped so their mean and deviation
//! match the true residual cosines observed during training.
//!
//! Index layout per base-layer directed edge `(c, d)`, in CSR order:
//! `[b_d, ‖d_res‖², P d_res]`, `r + 2` floats. Per node: `[‖c‖², P c]`.

mod approx;
mod eval;
mod rplsh;
mod train;

use alloc::vec::Vec;

use crate::linalg::Projection;
use crate::{Error, Metric, Result, SearchGraph};

pub use approx::{approx_greedy_search, ApproxOptions, QueryContext};
pub use eval::{approximation_error, sample_residual_pairs, ResidualPair};
pub use rplsh::{hamming_cosine, random_projection, rplsh_estimator};
pub use train::{
    collect_training_pairs, fit_distribution, pearson, residual, train_finger,
    train_finger_with_report, BasisKind, FingerConfig, RankChoice, TrainReport, TrainingPair,
    TrainingSet, AUTO_RANK_CORRELATION, AUTO_RANK_STEP,
};

/// How the residual cosine is read off the projected vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum AngleEstimator {
    /// Cosine of the projected vectors.
    Projected = 0,
    /// `cos(π · hamming(sgn Px, sgn Py) / r)`, random-hyperplane hashing.
    SignedHash = 1,
}

impl AngleEstimator {
    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Self::Projected),
            1 => Some(Self::SignedHash),
            _ => None,
        }
    }
}

/// Moments of true (`mu`, `sigma`) and estimated (`mu_hat`, `sigma_hat`)
/// residual cosines over the training pairs, and the mean absolute error
/// `epsilon` left after matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionParams {
    pub mu: f64,
    pub sigma: f64,
    pub mu_hat: f64,
    pub sigma_hat: f64,
    pub epsilon: f64,
}

impl DistributionParams {
    /// Maps an estimated cosine onto the true cosine distribution.
    #[inline]
    pub fn match_cosine(&self, estimate: f64) -> f64 {
        (estimate - self.mu_hat) * (self.sigma / self.sigma_hat) + self.mu
    }

    /// Moments that leave estimates unchanged and add no correction.
    pub fn identity() -> Self {
        Self {
            mu: 0.0,
            sigma: 1.0,
            mu_hat: 0.0,
            sigma_hat: 1.0,
            epsilon: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePayload<'a> {
    /// `cᵀd / cᵀc`.
    pub coeff: f32,
    /// `‖d_res‖²`.
    pub res_sqnorm: f32,
    /// `P d_res`.
    pub proj_res: &'a [f32],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodePayload<'a> {
    pub sqnorm: f32,
    pub proj_center: &'a [f32],
}

/// Trained projection, distribution parameters and per-node/per-edge
/// payloads for one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerIndex {
    metric: Metric,
    projection: Projection,
    estimator: AngleEstimator,
    dist: DistributionParams,
    /// `n x (r + 1)`.
    nodes: Vec<f32>,
    /// `|E| x (r + 2)`, CSR order of the base layer.
    edges: Vec<f32>,
    offsets: Vec<usize>,
}

impl FingerIndex {
    /// Assembles an index from stored parts, checking them against `graph`.
    pub fn from_parts(
        graph: &SearchGraph,
        metric: Metric,
        projection: Projection,
        estimator: AngleEstimator,
        dist: DistributionParams,
        nodes: Vec<f32>,
        edges: Vec<f32>,
    ) -> Result<Self> {
        let r = projection.rank();
        let offsets = graph.base_offsets();
        let e = offsets[graph.len()];
        if projection.dim() != graph.dim() {
            return Err(Error::IndexMismatch(alloc::format!(
                "projection dim {} vs graph dim {}",
                projection.dim(),
                graph.dim()
            )));
        }
        if nodes.len() != graph.len() * (r + 1) {
            return Err(Error::IndexMismatch(alloc::format!(
                "{} node payload floats for {} nodes at rank {r}",
                nodes.len(),
                graph.len()
            )));
        }
        if edges.len() != e * (r + 2) {
            return Err(Error::IndexMismatch(alloc::format!(
                "{} edge payload floats for {e} edges at rank {r}",
                edges.len()
            )));
        }
        if dist.sigma_hat <= 0.0 || dist.sigma <= 0.0 {
            return Err(Error::Degenerate(
                "distribution deviations must be positive".into(),
            ));
        }
        Ok(Self {
            metric,
            projection,
            estimator,
            dist,
            nodes,
            edges,
            offsets,
        })
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn rank(&self) -> usize {
        self.projection.rank()
    }

    pub fn dim(&self) -> usize {
        self.projection.dim()
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edge_count(&self) -> usize {
        self.offsets[self.len()]
    }

    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    pub fn estimator(&self) -> AngleEstimator {
        self.estimator
    }

    pub fn distribution(&self) -> &DistributionParams {
        &self.dist
    }

    pub fn node_payloads(&self) -> &[f32] {
        &self.nodes
    }

    pub fn edge_payloads(&self) -> &[f32] {
        &self.edges
    }

    #[inline]
    pub fn node(&self, node: u32) -> NodePayload<'_> {
        let stride = self.rank() + 1;
        let raw = &self.nodes[node as usize * stride..(node as usize + 1) * stride];
        NodePayload {
            sqnorm: raw[0],
            proj_center: &raw[1..],
        }
    }

    /// Payload of the `slot`-th base-layer neighbor of `center`.
    #[inline]
    pub fn edge(&self, center: u32, slot: usize) -> EdgePayload<'_> {
        let stride = self.rank() + 2;
        let at = self.offsets[center as usize] + slot;
        debug_assert!(at < self.offsets[center as usize + 1]);
        let raw = &self.edges[at * stride..(at + 1) * stride];
        EdgePayload {
            coeff: raw[0],
            res_sqnorm: raw[1],
            proj_res: &raw[2..],
        }
    }

    /// Floats held beyond the graph: `(r + 2)|E| + (r + 1)n + r m`.
    pub fn extra_floats(&self) -> usize {
        self.edges.len() + self.nodes.len() + self.projection.as_slice().len()
    }

    /// Whether this index was trained on `graph`'s base layer.
    pub fn matches_graph(&self, graph: &SearchGraph) -> bool {
        graph.len() == self.len()
            && graph.dim() == self.dim()
            && (0..graph.len()).all(|c| {
                graph.base_neighbors(c as u32).len() == self.offsets[c + 1] - self.offsets[c]
            })
    }

    /// Residual-cosine estimate for two residual vectors, with optional
    /// distribution matching and without the `epsilon` correction.
    pub fn estimate_residual_cosine(&self, x: &[f64], y: &[f64], matching: bool) -> f64 {
        let px = self.projection.project_f64(x);
        let py = self.projection.project_f64(y);
        let raw = estimate_cosine(self.estimator, &px, &py);
        if matching {
            self.dist.match_cosine(raw)
        } else {
            raw
        }
    }
}

pub(crate) fn estimate_cosine(estimator: AngleEstimator, px: &[f64], py: &[f64]) -> f64 {
    match estimator {
        AngleEstimator::Projected => {
            let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
            for (a, b) in px.iter().zip(py) {
                ab += a * b;
                aa += a * a;
                bb += b * b;
            }
            crate::metric::cosine_from_parts(ab, aa, bb)
        }
        AngleEstimator::SignedHash => {
            let differing = px
                .iter()
                .zip(py)
                .filter(|(a, b)| (**a >= 0.0) != (**b >= 0.0))
                .count();
            libm::cos(core::f64::consts::PI * differing as f64 / px.len() as f64)
        }
    }
}
