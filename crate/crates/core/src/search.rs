//! Best-first greedy graph search with instrumentation.
//!
//! The base-layer loop keeps a candidate min-queue `C` and a bounded
//! top-results max-queue `T` of capacity `efs`. Each iteration pops the
//! nearest candidate, stops once it is further than the upper bound `ub`
//! (the furthest element of `T`), and otherwise scores its unvisited
//! neighbors. A neighbor enters both queues if it is within `ub` or `T` is not
//! yet full. Upper layers are descended greedily with beam width one to pick
//! the base-layer start point.
//!
//! The same loop drives the approximate search in [`crate::finger`]: after a
//! configurable number of expansions, neighbors are first scored by an
//! [`Approximator`] and only those whose estimate is within `ub` get an exact
//! distance.

use alloc::borrow::Cow;
use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::metric::sq_norm;
use crate::queue::{Candidate, VisitedSet};
use crate::{Error, Metric, Result, SearchGraph, VectorSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchParams {
    /// Capacity of the top-results queue.
    pub efs: usize,
    /// Number of neighbors returned.
    pub k: usize,
}

impl SearchParams {
    pub fn new(efs: usize, k: usize) -> Result<Self> {
        let params = Self { efs, k };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 || self.efs < self.k {
            return Err(Error::InvalidParameter(alloc::format!(
                "need efs >= k >= 1, got efs={} k={}",
                self.efs,
                self.k
            )));
        }
        Ok(())
    }
}

/// Counters for one expansion of the candidate loop.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    /// Neighbors scored during this expansion.
    pub computations: u64,
    /// Of those, how many scored above the upper bound of a full `T`.
    pub exceeding: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub exact_calls: u64,
    pub approx_calls: u64,
    /// Base-layer expansions.
    pub hops: u64,
    pub queries: u64,
    /// Indexed by expansion number; summed over queries after [`merge`](Self::merge).
    pub steps: Vec<StepStats>,
}

impl SearchStats {
    /// `exact + approx * rank / dim`; exact calls alone when no rank applies.
    pub fn effective_calls(&self, rank: Option<usize>, dim: usize) -> f64 {
        let approx = match rank {
            Some(r) => self.approx_calls as f64 * r as f64 / dim as f64,
            None => 0.0,
        };
        self.exact_calls as f64 + approx
    }

    pub fn merge(&mut self, other: &SearchStats) {
        self.exact_calls += other.exact_calls;
        self.approx_calls += other.approx_calls;
        self.hops += other.hops;
        self.queries += other.queries;
        if self.steps.len() < other.steps.len() {
            self.steps.resize(other.steps.len(), StepStats::default());
        }
        for (acc, s) in self.steps.iter_mut().zip(&other.steps) {
            acc.computations += s.computations;
            acc.exceeding += s.exceeding;
        }
    }

    /// Fraction of scored neighbors above the upper bound, per step.
    pub fn exceed_fractions(&self) -> Vec<Option<f64>> {
        self.steps
            .iter()
            .map(|s| (s.computations > 0).then(|| s.exceeding as f64 / s.computations as f64))
            .collect()
    }
}

/// Search output, closest first. Distances are in [`crate::exact_distance`]
/// units.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultSet {
    ids: Vec<u32>,
    distances: Vec<f32>,
}

impl ResultSet {
    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn distances(&self) -> &[f32] {
        &self.distances
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Hook used by the search loop to estimate neighbor scores of an expanded
/// node without computing exact distances.
pub(crate) trait Approximator {
    /// Prepares estimates for neighbors of `center`, whose exact score is
    /// known. Returns false when no estimate is available for this center.
    fn prepare(&mut self, center: u32, center_score: f32) -> bool;

    /// Estimated score of the `slot`-th base-layer neighbor of the prepared
    /// center.
    fn estimate(&mut self, center: u32, slot: usize) -> f32;
}

pub(crate) struct NoApprox;

impl Approximator for NoApprox {
    fn prepare(&mut self, _: u32, _: f32) -> bool {
        false
    }

    fn estimate(&mut self, _: u32, _: usize) -> f32 {
        unreachable!("estimate called without a prepared center")
    }
}

/// Reusable per-thread search state.
pub struct Searcher {
    visited: VisitedSet,
}

impl Searcher {
    pub fn new(graph: &SearchGraph) -> Self {
        Self {
            visited: VisitedSet::new(graph.len()),
        }
    }

    /// Exact greedy search.
    pub fn search(
        &mut self,
        graph: &SearchGraph,
        dataset: &VectorSet,
        query: &[f32],
        params: &SearchParams,
    ) -> Result<(ResultSet, SearchStats)> {
        check_inputs(graph, dataset, query, params)?;
        let query = prepare_query(dataset.metric(), query);
        Ok(self.run(graph, dataset, &query, params, usize::MAX, &mut NoApprox))
    }

    pub(crate) fn run<A: Approximator>(
        &mut self,
        graph: &SearchGraph,
        dataset: &VectorSet,
        query: &[f32],
        params: &SearchParams,
        switch_after: usize,
        approx: &mut A,
    ) -> (ResultSet, SearchStats) {
        let metric = dataset.metric();
        let mut stats = SearchStats {
            queries: 1,
            ..SearchStats::default()
        };
        let exact = |id: u32, stats: &mut SearchStats| {
            stats.exact_calls += 1;
            metric.score(query, dataset.row(id as usize))
        };

        let mut start = graph.entry_point();
        let mut start_score = exact(start, &mut stats);
        for level in (1..graph.num_levels()).rev() {
            loop {
                let mut moved = false;
                for &nb in graph.neighbors(level, start) {
                    let s = exact(nb, &mut stats);
                    if Candidate::new(s, nb) < Candidate::new(start_score, start) {
                        start = nb;
                        start_score = s;
                        moved = true;
                    }
                }
                if !moved {
                    break;
                }
            }
        }

        let efs = params.efs;
        self.visited.clear();
        self.visited.insert(start);
        let first = Candidate::new(start_score, start);
        let mut candidates = BinaryHeap::new();
        let mut top: BinaryHeap<Candidate> = BinaryHeap::with_capacity(efs + 1);
        candidates.push(Reverse(first));
        top.push(first);

        while let Some(Reverse(cur)) = candidates.pop() {
            let mut ub = top.peek().map_or(f32::INFINITY, |c| c.score);
            if cur.score > ub {
                break;
            }
            stats.hops += 1;
            let mut step = StepStats::default();
            let approximate = stats.hops > switch_after as u64;
            let mut prepared: Option<bool> = None;

            for (slot, &nb) in graph.base_neighbors(cur.id).iter().enumerate() {
                if !self.visited.insert(nb) {
                    continue;
                }
                step.computations += 1;
                let full = top.len() >= efs;
                if approximate && full {
                    let ready = *prepared.get_or_insert_with(|| approx.prepare(cur.id, cur.score));
                    if ready {
                        stats.approx_calls += 1;
                        if approx.estimate(cur.id, slot) > ub {
                            step.exceeding += 1;
                            continue;
                        }
                    }
                }
                let score = exact(nb, &mut stats);
                if full && score > ub {
                    step.exceeding += 1;
                }
                if score <= ub || !full {
                    let cand = Candidate::new(score, nb);
                    candidates.push(Reverse(cand));
                    top.push(cand);
                    if top.len() > efs {
                        top.pop();
                    }
                    ub = top.peek().unwrap().score;
                }
            }
            stats.steps.push(step);
        }

        let mut ids = Vec::with_capacity(params.k);
        let mut distances = Vec::with_capacity(params.k);
        for c in top.into_sorted_vec().into_iter().take(params.k) {
            ids.push(c.id);
            distances.push(metric.score_to_distance(c.score));
        }
        (ResultSet { ids, distances }, stats)
    }
}

pub(crate) fn check_inputs(
    graph: &SearchGraph,
    dataset: &VectorSet,
    query: &[f32],
    params: &SearchParams,
) -> Result<()> {
    params.validate()?;
    if graph.len() != dataset.len() {
        return Err(Error::GraphMismatch {
            graph: graph.len(),
            dataset: dataset.len(),
        });
    }
    if graph.dim() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: graph.dim(),
            found: dataset.dim(),
        });
    }
    if query.len() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            found: query.len(),
        });
    }
    Ok(())
}

/// Normalizes cosine queries; other metrics borrow the input.
pub(crate) fn prepare_query(metric: Metric, query: &[f32]) -> Cow<'_, [f32]> {
    if metric != Metric::Cosine {
        return Cow::Borrowed(query);
    }
    let norm = libm::sqrt(sq_norm(query) as f64);
    if norm == 0.0 {
        return Cow::Borrowed(query);
    }
    Cow::Owned(query.iter().map(|&x| (x as f64 / norm) as f32).collect())
}

/// Exact greedy search for one query.
pub fn greedy_search(
    graph: &SearchGraph,
    dataset: &VectorSet,
    query: &[f32],
    params: &SearchParams,
) -> Result<(ResultSet, SearchStats)> {
    Searcher::new(graph).search(graph, dataset, query, params)
}
