//! Graph-based approximate K-nearest-neighbor search with FINGER-style
//! distance approximation.
//!
//! The crate is `no_std` (it needs `alloc`). It covers the in-memory parts of
//! the pipeline:
//!
//! - [`VectorSet`] storage, [`Metric`] kernels and the brute-force
//!   [`brute_force_knn`] oracle,
//! - HNSW-style [`SearchGraph`] construction,
//! - exact best-first [`greedy_search`] with per-step instrumentation,
//! - the low-rank [`linalg`] basis trainer (Gram matrix + cyclic Jacobi),
//! - the [`finger`] index: training, approximate distance and the
//!   approximate greedy search that uses it to skip exact distance calls.
//!
//! File formats, dataset loading, timing and the benchmark CLI live in the
//! `finger` companion crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
pub mod finger;
pub mod graph;
pub mod knn;
pub mod linalg;
pub mod metric;
mod queue;
pub mod search;
mod vectors;

pub use error::{Error, Result};
pub use graph::{build_graph, edge_count, GraphParams, SearchGraph};
pub use knn::{brute_force_knn, recall_at_k, GroundTruth};
pub use metric::{exact_distance, Metric};
pub use search::{greedy_search, ResultSet, SearchParams, SearchStats, StepStats};
pub use vectors::VectorSet;
