//! Binary FINGER index file, stored next to its graph.
//!
//! ```text
//! magic      8 bytes "FNGRINDX"
//! version    u32 (1)
//! rank r     u32
//! dim m      u32
//! n          u64
//! edges |E|  u64
//! metric     u8  (0 l2, 1 ip, 2 cosine)
//! estimator  u8  (0 projected cosine, 1 signed hash)
//! mu sigma mu_hat sigma_hat epsilon   5 x f64
//! projection r x m f32, row-major
//! nodes      n x (r + 1) f32: |c|², P c
//! edges      |E| x (r + 2) f32 in graph CSR order: b_d, |d_res|², P d_res
//! ```
//! Per-node edge offsets come from the graph, so loading needs it.

use std::fs;
use std::path::Path;

use finger_core::finger::{AngleEstimator, DistributionParams, FingerIndex};
use finger_core::linalg::Projection;
use finger_core::{Metric, SearchGraph};

use crate::binio::{Reader, Writer};
use crate::FileError;

pub const INDEX_MAGIC: &[u8; 8] = b"FNGRINDX";
pub const INDEX_VERSION: u32 = 1;
pub const INDEX_HEADER_BYTES: usize = 8 + 4 + 4 + 4 + 8 + 8 + 1 + 1 + 5 * 8;

/// Size of the encoded index.
pub fn index_file_size(rank: usize, dim: usize, nodes: usize, edges: usize) -> usize {
    INDEX_HEADER_BYTES + 4 * ((rank + 2) * edges + (rank + 1) * nodes + rank * dim)
}

pub fn encode_index(index: &FingerIndex) -> Vec<u8> {
    let mut w = Writer::default();
    w.raw(INDEX_MAGIC);
    w.u32(INDEX_VERSION);
    w.u32(index.rank() as u32);
    w.u32(index.dim() as u32);
    w.u64(index.len() as u64);
    w.u64(index.edge_count() as u64);
    w.u8(index.metric().tag());
    w.u8(index.estimator() as u8);
    let d = index.distribution();
    for v in [d.mu, d.sigma, d.mu_hat, d.sigma_hat, d.epsilon] {
        w.f64(v);
    }
    w.f32s(index.projection().as_slice());
    w.f32s(index.node_payloads());
    w.f32s(index.edge_payloads());
    w.bytes
}

pub fn decode_index(bytes: &[u8], graph: &SearchGraph) -> Result<FingerIndex, FileError> {
    let mut r = Reader::new(bytes);
    r.magic(INDEX_MAGIC)?;
    let version = r.u32()?;
    if version != INDEX_VERSION {
        return Err(FileError::Version {
            found: version,
            expected: INDEX_VERSION,
        });
    }
    let rank = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let at = r.offset();
    let n = r.len()?;
    let edges = r.len()?;
    if n != graph.len() || edges != finger_core::edge_count(graph) || dim != graph.dim() {
        return Err(FileError::Invalid {
            offset: at,
            detail: format!(
                "index for n={n} |E|={edges} dim={dim}, graph has n={} |E|={} dim={}",
                graph.len(),
                finger_core::edge_count(graph),
                graph.dim()
            ),
        });
    }
    let at = r.offset();
    let metric_tag = r.u8()?;
    let metric = Metric::from_tag(metric_tag).ok_or_else(|| FileError::Invalid {
        offset: at,
        detail: format!("metric tag {metric_tag}"),
    })?;
    let est_tag = r.u8()?;
    let estimator = AngleEstimator::from_tag(est_tag).ok_or_else(|| FileError::Invalid {
        offset: at + 1,
        detail: format!("estimator tag {est_tag}"),
    })?;
    let dist = DistributionParams {
        mu: r.f64()?,
        sigma: r.f64()?,
        mu_hat: r.f64()?,
        sigma_hat: r.f64()?,
        epsilon: r.f64()?,
    };
    let projection = Projection::new(r.f32s(rank * dim)?, rank, dim)?;
    let nodes = r.f32s(n * (rank + 1))?;
    let edge_data = r.f32s(edges * (rank + 2))?;
    r.finish()?;
    Ok(FingerIndex::from_parts(
        graph, metric, projection, estimator, dist, nodes, edge_data,
    )?)
}

pub fn save_index(path: impl AsRef<Path>, index: &FingerIndex) -> Result<(), FileError> {
    fs::write(path, encode_index(index))?;
    Ok(())
}

pub fn load_index(path: impl AsRef<Path>, graph: &SearchGraph) -> Result<FingerIndex, FileError> {
    decode_index(&fs::read(path)?, graph)
}
