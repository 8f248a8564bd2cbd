//! Query batches spread over worker threads.

use std::thread;
use std::time::{Duration, Instant};

use finger_core::finger::{ApproxOptions, FingerIndex};
use finger_core::knn::knn_scan;
use finger_core::search::Searcher;
use finger_core::{
    GroundTruth, Result, ResultSet, SearchGraph, SearchParams, SearchStats, VectorSet,
};

#[derive(Debug, Clone, Copy)]
pub enum Method<'a> {
    Exact,
    Approx {
        index: &'a FingerIndex,
        options: ApproxOptions,
    },
}

#[derive(Debug, Clone)]
pub struct BatchOutput {
    /// One result per query, in query order.
    pub results: Vec<ResultSet>,
    pub stats: SearchStats,
    pub elapsed: Duration,
}

impl BatchOutput {
    pub fn throughput(&self) -> f64 {
        self.results.len() as f64 / self.elapsed.as_secs_f64().max(f64::MIN_POSITIVE)
    }

    /// Mean recall@k against `truth`.
    pub fn recall(&self, truth: &GroundTruth, k: usize) -> f64 {
        let total: f64 = self
            .results
            .iter()
            .enumerate()
            .map(|(q, r)| finger_core::recall_at_k(r.ids(), truth.ids(q), k))
            .sum();
        total / self.results.len() as f64
    }
}

/// Default worker count: available parallelism.
pub fn default_workers() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get())
}

fn chunk_bounds(total: usize, workers: usize) -> Vec<(usize, usize)> {
    let workers = workers.clamp(1, total.max(1));
    let size = total.div_ceil(workers);
    (0..workers)
        .map(|w| (w * size, ((w + 1) * size).min(total)))
        .filter(|(a, b)| a < b)
        .collect()
}

/// Runs every query with `workers` threads over contiguous query ranges.
/// Results and merged stats do not depend on the worker count.
pub fn batch_search(
    graph: &SearchGraph,
    dataset: &VectorSet,
    queries: &VectorSet,
    params: &SearchParams,
    method: Method<'_>,
    workers: usize,
) -> Result<BatchOutput> {
    let start = Instant::now();
    let parts = thread::scope(|scope| {
        let handles: Vec<_> = chunk_bounds(queries.len(), workers)
            .into_iter()
            .map(|(lo, hi)| {
                scope.spawn(move || -> Result<(Vec<ResultSet>, SearchStats)> {
                    let mut searcher = Searcher::new(graph);
                    let mut stats = SearchStats::default();
                    let mut results = Vec::with_capacity(hi - lo);
                    for q in lo..hi {
                        let query = queries.row(q);
                        let (res, s) = match method {
                            Method::Exact => searcher.search(graph, dataset, query, params)?,
                            Method::Approx { index, options } => searcher
                                .search_approx(graph, dataset, index, query, params, &options)?,
                        };
                        stats.merge(&s);
                        results.push(res);
                    }
                    Ok((results, stats))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("search worker panicked"))
            .collect::<Vec<_>>()
    });
    let elapsed = start.elapsed();
    let mut results = Vec::with_capacity(queries.len());
    let mut stats = SearchStats::default();
    for part in parts {
        let (r, s) = part?;
        results.extend(r);
        stats.merge(&s);
    }
    Ok(BatchOutput {
        results,
        stats,
        elapsed,
    })
}

/// Brute-force ground truth computed with `workers` threads.
pub fn parallel_ground_truth(
    dataset: &VectorSet,
    queries: &VectorSet,
    k: usize,
    workers: usize,
) -> Result<GroundTruth> {
    if k == 0 || k > dataset.len() {
        return Err(finger_core::Error::InvalidParameter(format!(
            "k={k} must be in 1..={}",
            dataset.len()
        )));
    }
    if queries.dim() != dataset.dim() {
        return Err(finger_core::Error::DimensionMismatch {
            expected: dataset.dim(),
            found: queries.dim(),
        });
    }
    let parts = thread::scope(|scope| {
        let handles: Vec<_> = chunk_bounds(queries.len(), workers)
            .into_iter()
            .map(|(lo, hi)| {
                scope.spawn(move || {
                    let mut ids = Vec::with_capacity((hi - lo) * k);
                    let mut dists = Vec::with_capacity((hi - lo) * k);
                    for q in lo..hi {
                        let (i, d) = knn_scan(dataset, queries.row(q), k);
                        ids.extend(i);
                        dists.extend(d);
                    }
                    (ids, dists)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("ground-truth worker panicked"))
            .collect::<Vec<_>>()
    });
    let (mut ids, mut dists) = (Vec::new(), Vec::new());
    for (i, d) in parts {
        ids.extend(i);
        dists.extend(d);
    }
    GroundTruth::new(k, ids, dists)
}
