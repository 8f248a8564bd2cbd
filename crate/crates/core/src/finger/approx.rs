use alloc::vec;
use alloc::vec::Vec;

use super::{AngleEstimator, FingerIndex};
use crate::metric::{cosine_from_parts, dot_f64};
use crate::search::{check_inputs, prepare_query, Approximator, Searcher};
use crate::{Error, Metric, Result, ResultSet, SearchGraph, SearchParams, SearchStats, VectorSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApproxOptions {
    /// Expansions done with exact distances only before estimates are used.
    pub switch_after: usize,
    /// Apply the distribution-matching transform to estimated cosines.
    pub matching: bool,
    /// Add the trained mean absolute error to matched cosines.
    pub epsilon: bool,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        Self {
            switch_after: 5,
            matching: true,
            epsilon: true,
        }
    }
}

/// Per-query state for estimating neighbor scores around one center at a time.
pub struct QueryContext<'a> {
    index: &'a FingerIndex,
    options: ApproxOptions,
    metric: Metric,
    q_sqnorm: f64,
    proj_query: Vec<f64>,
    // Prepared center terms.
    c_sqnorm: f64,
    b_q: f64,
    q_res_sqnorm: f64,
    proj_q_res: Vec<f64>,
    proj_q_res_sqnorm: f64,
}

impl<'a> QueryContext<'a> {
    /// `query` must already be normalized for cosine indexes.
    pub fn new(index: &'a FingerIndex, query: &[f32], options: ApproxOptions) -> Self {
        let proj_query = index
            .projection()
            .project(query)
            .into_iter()
            .map(f64::from)
            .collect();
        Self {
            index,
            options,
            metric: index.metric(),
            q_sqnorm: dot_f64(query, query),
            proj_query,
            c_sqnorm: 0.0,
            b_q: 0.0,
            q_res_sqnorm: 0.0,
            proj_q_res: vec![0.0; index.rank()],
            proj_q_res_sqnorm: 0.0,
        }
    }

    /// Splits the query against `center`, whose exact score is
    /// `center_score`. Returns false for a zero-norm center.
    pub fn set_center(&mut self, center: u32, center_score: f32) -> bool {
        let node = self.index.node(center);
        let cc = node.sqnorm as f64;
        if cc <= 0.0 {
            return false;
        }
        let qc = match self.metric {
            Metric::L2 => (self.q_sqnorm + cc - center_score as f64) * 0.5,
            Metric::InnerProduct | Metric::Cosine => -(center_score as f64),
        };
        let b_q = qc / cc;
        self.c_sqnorm = cc;
        self.b_q = b_q;
        self.q_res_sqnorm = (self.q_sqnorm - b_q * b_q * cc).max(0.0);
        let mut sq = 0.0;
        for ((out, &pq), &pc) in self
            .proj_q_res
            .iter_mut()
            .zip(&self.proj_query)
            .zip(node.proj_center)
        {
            *out = pq - b_q * pc as f64;
            sq += *out * *out;
        }
        self.proj_q_res_sqnorm = sq;
        true
    }

    fn residual_cosine(&self, proj_res: &[f32]) -> f64 {
        let raw = match self.index.estimator() {
            AngleEstimator::Projected => {
                let (mut ab, mut bb) = (0.0, 0.0);
                for (&a, &b) in self.proj_q_res.iter().zip(proj_res) {
                    let b = b as f64;
                    ab += a * b;
                    bb += b * b;
                }
                cosine_from_parts(ab, self.proj_q_res_sqnorm, bb)
            }
            AngleEstimator::SignedHash => {
                let differing = self
                    .proj_q_res
                    .iter()
                    .zip(proj_res)
                    .filter(|(a, b)| (**a >= 0.0) != (**b >= 0.0))
                    .count();
                libm::cos(core::f64::consts::PI * differing as f64 / proj_res.len() as f64)
            }
        };
        let dist = self.index.distribution();
        let mut t = if self.options.matching {
            dist.match_cosine(raw)
        } else {
            raw
        };
        if self.options.epsilon {
            t += dist.epsilon;
        }
        t.clamp(-1.0, 1.0)
    }

    /// Estimated score of the `slot`-th neighbor of the current center, in
    /// the metric's internal score units.
    pub fn estimate_score(&self, center: u32, slot: usize) -> f32 {
        let edge = self.index.edge(center, slot);
        let b_d = edge.coeff as f64;
        let d_res_sq = edge.res_sqnorm as f64;
        let t = self.residual_cosine(edge.proj_res);
        let res_dot = t * libm::sqrt(self.q_res_sqnorm) * libm::sqrt(d_res_sq);
        let score = match self.metric {
            Metric::L2 => {
                let db = self.b_q - b_d;
                db * db * self.c_sqnorm + self.q_res_sqnorm + d_res_sq - 2.0 * res_dot
            }
            Metric::InnerProduct | Metric::Cosine => -(self.b_q * b_d * self.c_sqnorm + res_dot),
        };
        score as f32
    }
}

impl Approximator for QueryContext<'_> {
    fn prepare(&mut self, center: u32, center_score: f32) -> bool {
        self.set_center(center, center_score)
    }

    fn estimate(&mut self, center: u32, slot: usize) -> f32 {
        self.estimate_score(center, slot)
    }
}

fn check_index(graph: &SearchGraph, dataset: &VectorSet, index: &FingerIndex) -> Result<()> {
    if index.len() != graph.len()
        || index.dim() != graph.dim()
        || index.edge_count() != crate::edge_count(graph)
    {
        return Err(Error::IndexMismatch(alloc::format!(
            "index covers {} nodes / {} edges in dim {}, graph has {} / {} in dim {}",
            index.len(),
            index.edge_count(),
            index.dim(),
            graph.len(),
            crate::edge_count(graph),
            graph.dim()
        )));
    }
    if index.metric() != dataset.metric() {
        return Err(Error::IndexMismatch(alloc::format!(
            "index metric {} vs dataset metric {}",
            index.metric(),
            dataset.metric()
        )));
    }
    Ok(())
}

impl Searcher {
    /// Greedy search that estimates neighbor scores after
    /// `options.switch_after` expansions.
    pub fn search_approx(
        &mut self,
        graph: &SearchGraph,
        dataset: &VectorSet,
        index: &FingerIndex,
        query: &[f32],
        params: &SearchParams,
        options: &ApproxOptions,
    ) -> Result<(ResultSet, SearchStats)> {
        check_inputs(graph, dataset, query, params)?;
        check_index(graph, dataset, index)?;
        let query = prepare_query(dataset.metric(), query);
        let mut ctx = QueryContext::new(index, &query, *options);
        Ok(self.run(
            graph,
            dataset,
            &query,
            params,
            options.switch_after,
            &mut ctx,
        ))
    }
}

/// Approximate greedy search for one query.
pub fn approx_greedy_search(
    graph: &SearchGraph,
    dataset: &VectorSet,
    index: &FingerIndex,
    query: &[f32],
    params: &SearchParams,
    options: &ApproxOptions,
) -> Result<(ResultSet, SearchStats)> {
    Searcher::new(graph).search_approx(graph, dataset, index, query, params, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finger::{train_finger, FingerConfig};
    use crate::{build_graph, greedy_search, GraphParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn setup(metric: Metric, n: usize, m: usize) -> (SearchGraph, VectorSet) {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let data: Vec<f32> = (0..n * m).map(|_| rng.sample(StandardNormal)).collect();
        let data = VectorSet::new(data, m, metric).unwrap();
        let graph = build_graph(
            &data,
            &GraphParams {
                max_degree: 8,
                ef_construction: 40,
                seed: 2,
            },
        )
        .unwrap();
        (graph, data)
    }

    const EXACT: ApproxOptions = ApproxOptions {
        switch_after: 0,
        matching: false,
        epsilon: false,
    };

    #[test]
    fn full_rank_estimates_match_exact_scores() {
        for metric in [Metric::L2, Metric::InnerProduct, Metric::Cosine] {
            let (graph, data) = setup(metric, 300, 12);
            let index = train_finger(&graph, &data, &FingerConfig::fixed(12)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let raw: Vec<f32> = (0..12).map(|_| rng.sample(StandardNormal)).collect();
            let q = prepare_query(metric, &raw);
            let mut ctx = QueryContext::new(&index, &q, EXACT);
            for c in 0..300u32 {
                let c_score = metric.score(&q, data.row(c as usize));
                assert!(ctx.set_center(c, c_score));
                for (slot, &d) in graph.base_neighbors(c).iter().enumerate() {
                    let exact = metric.score(&q, data.row(d as usize));
                    let est = ctx.estimate_score(c, slot);
                    assert!(
                        (est - exact).abs() <= 1e-3 * exact.abs().max(1.0),
                        "{metric}: {est} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn query_at_center_recovers_neighbor_distance() {
        let (graph, data) = setup(Metric::L2, 200, 16);
        let index = train_finger(&graph, &data, &FingerConfig::fixed(4)).unwrap();
        let mut ctx = QueryContext::new(&index, data.row(7), ApproxOptions::default());
        assert!(ctx.set_center(7, 0.0));
        for (slot, &d) in graph.base_neighbors(7).iter().enumerate() {
            let exact = crate::metric::sq_l2(data.row(7), data.row(d as usize));
            let est = ctx.estimate_score(7, slot);
            assert!((est - exact).abs() <= 1e-3 * exact, "{est} vs {exact}");
        }
    }

    #[test]
    fn never_switching_matches_exact_search() {
        let (graph, data) = setup(Metric::L2, 500, 16);
        let index = train_finger(&graph, &data, &FingerConfig::fixed(4)).unwrap();
        let params = SearchParams::new(20, 10).unwrap();
        let options = ApproxOptions {
            switch_after: usize::MAX,
            ..ApproxOptions::default()
        };
        for q in 0..20 {
            let query = data.row(q * 7);
            let (exact, exact_stats) = greedy_search(&graph, &data, query, &params).unwrap();
            let (approx, approx_stats) =
                approx_greedy_search(&graph, &data, &index, query, &params, &options).unwrap();
            assert_eq!(exact, approx);
            assert_eq!(exact_stats, approx_stats);
            assert_eq!(approx_stats.approx_calls, 0);
        }
    }

    #[test]
    fn zero_center_falls_back_to_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut raw: Vec<f32> = (0..100 * 6).map(|_| rng.sample(StandardNormal)).collect();
        raw[..6].fill(0.0);
        let data = VectorSet::new(raw, 6, Metric::L2).unwrap();
        let graph = build_graph(
            &data,
            &GraphParams {
                max_degree: 6,
                ef_construction: 30,
                seed: 3,
            },
        )
        .unwrap();
        let index = train_finger(&graph, &data, &FingerConfig::fixed(6)).unwrap();
        let mut ctx = QueryContext::new(&index, data.row(5), EXACT);
        assert!(!ctx.set_center(0, 1.0));
        let params = SearchParams::new(8, 4).unwrap();
        for q in [0usize, 10, 20] {
            let (exact, _) = greedy_search(&graph, &data, data.row(q), &params).unwrap();
            let (approx, _) =
                approx_greedy_search(&graph, &data, &index, data.row(q), &params, &EXACT).unwrap();
            assert_eq!(exact.ids(), approx.ids());
        }
    }

    #[test]
    fn rejects_foreign_index() {
        let (graph, data) = setup(Metric::L2, 200, 8);
        let (other_graph, other_data) = setup(Metric::L2, 150, 8);
        let index = train_finger(&other_graph, &other_data, &FingerConfig::fixed(4)).unwrap();
        let params = SearchParams::new(10, 5).unwrap();
        let res = approx_greedy_search(
            &graph,
            &data,
            &index,
            data.row(0),
            &params,
            &ApproxOptions::default(),
        );
        assert!(matches!(res, Err(Error::IndexMismatch(_))));
    }
}
