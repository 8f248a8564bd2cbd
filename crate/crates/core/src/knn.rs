//! Exact k-nearest-neighbor scan and the recall@K measure.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::{Error, Result, VectorSet};

/// Exact neighbors for a batch of queries, `k` per query, closest first.
///
/// `distances` is empty when the truth was loaded from an id-only file.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    k: usize,
    ids: Vec<u32>,
    distances: Vec<f32>,
}

impl GroundTruth {
    pub fn new(k: usize, ids: Vec<u32>, distances: Vec<f32>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter(
                "ground truth k must be at least 1".into(),
            ));
        }
        if !ids.len().is_multiple_of(k) || (!distances.is_empty() && distances.len() != ids.len()) {
            return Err(Error::InvalidParameter(
                "ground truth arrays are not q x k".into(),
            ));
        }
        Ok(Self { k, ids, distances })
    }

    pub fn from_ids(k: usize, ids: Vec<u32>) -> Result<Self> {
        Self::new(k, ids, Vec::new())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of queries.
    pub fn len(&self) -> usize {
        self.ids.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self, query: usize) -> &[u32] {
        &self.ids[query * self.k..(query + 1) * self.k]
    }

    pub fn distances(&self, query: usize) -> Option<&[f32]> {
        if self.distances.is_empty() {
            None
        } else {
            Some(&self.distances[query * self.k..(query + 1) * self.k])
        }
    }

    pub fn all_ids(&self) -> &[u32] {
        &self.ids
    }

    /// Keeps only the first `k` neighbors of each row.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k {
            return Err(Error::InvalidParameter(alloc::format!(
                "cannot truncate ground truth of k={} to {k}",
                self.k
            )));
        }
        let mut ids = Vec::with_capacity(self.len() * k);
        let mut distances = Vec::new();
        for q in 0..self.len() {
            ids.extend_from_slice(&self.ids(q)[..k]);
            if let Some(d) = self.distances(q) {
                distances.extend_from_slice(&d[..k]);
            }
        }
        Self::new(k, ids, distances)
    }
}

#[inline]
pub(crate) fn by_score_then_id(a: &(f32, u32), b: &(f32, u32)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Exact top-`k` of one query by full scan. Ties go to the lower index.
pub fn knn_scan(dataset: &VectorSet, query: &[f32], k: usize) -> (Vec<u32>, Vec<f32>) {
    assert!(k >= 1 && k <= dataset.len(), "knn_scan: k out of range");
    assert_eq!(query.len(), dataset.dim(), "knn_scan: dimension mismatch");
    let metric = dataset.metric();
    let mut scored: Vec<(f32, u32)> = dataset
        .rows()
        .enumerate()
        .map(|(i, row)| (metric.score(query, row), i as u32))
        .collect();
    if k < scored.len() {
        scored.select_nth_unstable_by(k - 1, by_score_then_id);
        scored.truncate(k);
    }
    scored.sort_unstable_by(by_score_then_id);
    scored
        .into_iter()
        .map(|(s, i)| (i, metric.score_to_distance(s)))
        .unzip()
}

/// Exact k nearest neighbors of every query, by full scan.
pub fn brute_force_knn(dataset: &VectorSet, queries: &VectorSet, k: usize) -> Result<GroundTruth> {
    if queries.dim() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            found: queries.dim(),
        });
    }
    if k == 0 || k > dataset.len() {
        return Err(Error::InvalidParameter(alloc::format!(
            "k={k} must be in 1..={}",
            dataset.len()
        )));
    }
    let mut ids = Vec::with_capacity(queries.len() * k);
    let mut distances = Vec::with_capacity(queries.len() * k);
    for q in queries.rows() {
        let (i, d) = knn_scan(dataset, q, k);
        ids.extend(i);
        distances.extend(d);
    }
    GroundTruth::new(k, ids, distances)
}

/// `|result ∩ truth| / k` over the first `k` entries of each list.
///
/// Panics if `k == 0`.
pub fn recall_at_k(result: &[u32], truth: &[u32], k: usize) -> f64 {
    assert!(k > 0, "recall_at_k: k must be positive");
    let result = &result[..result.len().min(k)];
    let truth = &truth[..truth.len().min(k)];
    let hits = truth.iter().filter(|t| result.contains(t)).count();
    hits as f64 / k as f64
}
