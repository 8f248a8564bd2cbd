//! Binary graph file.
//!
//! ```text
//! magic    8 bytes "FNGRGRPH"
//! version  u32 (1)
//! n        u64
//! dim      u32
//! M        u32
//! efc      u32
//! levels   u32
//! entry    u32
//! node levels   n x u8
//! per level     (n + 1) x u64 offsets, then offsets[n] x u32 neighbor ids
//! ```
//! All integers little-endian.

use std::fs;
use std::path::Path;

use finger_core::SearchGraph;

use crate::binio::{Reader, Writer};
use crate::FileError;

pub const GRAPH_MAGIC: &[u8; 8] = b"FNGRGRPH";
pub const GRAPH_VERSION: u32 = 1;

pub fn encode_graph(graph: &SearchGraph) -> Vec<u8> {
    let n = graph.len();
    let mut w = Writer::default();
    w.raw(GRAPH_MAGIC);
    w.u32(GRAPH_VERSION);
    w.u64(n as u64);
    w.u32(graph.dim() as u32);
    w.u32(graph.max_degree() as u32);
    w.u32(graph.ef_construction() as u32);
    w.u32(graph.num_levels() as u32);
    w.u32(graph.entry_point());
    w.raw(graph.node_levels());
    for level in 0..graph.num_levels() {
        let layer = graph.layer(level);
        let mut offset = 0u64;
        w.u64(0);
        for list in layer {
            offset += list.len() as u64;
            w.u64(offset);
        }
        for list in layer {
            w.u32s(list);
        }
    }
    w.bytes
}

pub fn decode_graph(bytes: &[u8]) -> Result<SearchGraph, FileError> {
    let mut r = Reader::new(bytes);
    r.magic(GRAPH_MAGIC)?;
    let version = r.u32()?;
    if version != GRAPH_VERSION {
        return Err(FileError::Version {
            found: version,
            expected: GRAPH_VERSION,
        });
    }
    let n = r.len()?;
    let dim = r.u32()? as usize;
    let max_degree = r.u32()? as usize;
    let efc = r.u32()? as usize;
    let at = r.offset();
    let levels = r.u32()? as usize;
    if levels == 0 || levels > 64 {
        return Err(FileError::Invalid {
            offset: at,
            detail: format!("{levels} levels"),
        });
    }
    let entry = r.u32()?;
    let node_levels = r.take(n)?.to_vec();
    let mut layers = Vec::with_capacity(levels);
    for _ in 0..levels {
        let at = r.offset();
        let offsets = r.u64s(n + 1)?;
        if offsets[0] != 0 || offsets.windows(2).any(|w| w[1] < w[0]) {
            return Err(FileError::Invalid {
                offset: at,
                detail: "offsets not monotone from zero".into(),
            });
        }
        let neighbors = r.u32s(usize::try_from(offsets[n]).unwrap_or(usize::MAX))?;
        layers.push(
            offsets
                .windows(2)
                .map(|w| neighbors[w[0] as usize..w[1] as usize].to_vec())
                .collect::<Vec<_>>(),
        );
    }
    r.finish()?;
    Ok(SearchGraph::from_layers(
        layers,
        node_levels,
        entry,
        dim,
        max_degree,
        efc,
    )?)
}

pub fn save_graph(path: impl AsRef<Path>, graph: &SearchGraph) -> Result<(), FileError> {
    fs::write(path, encode_graph(graph))?;
    Ok(())
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<SearchGraph, FileError> {
    decode_graph(&fs::read(path)?)
}
