//! Files, datasets, parallel batch search and the benchmark harness around
//! [`finger_core`].
//!
//! - [`vecs`]: fvecs/ivecs readers and writers.
//! - [`synth`]: seeded Gaussian-mixture datasets.
//! - [`graph_file`], [`index_file`]: binary graph and FINGER index files.
//! - [`batch`]: multi-threaded query batches and ground truth.
//! - [`bench`]: configuration, CSV/JSON records and the bench/ablate/stats runs
//!   behind the `finger` binary.

mod binio;
mod error;

pub mod batch;
pub mod bench;
pub mod graph_file;
pub mod index_file;
pub mod synth;
pub mod vecs;

pub use error::FileError;
