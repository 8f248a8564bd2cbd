//! HNSW-style layered proximity graph.
//!
//! Points are inserted in index order. Each point draws a level from a seeded
//! geometric distribution (normalization `1 / ln M`), descends the upper
//! layers greedily and, on every layer it belongs to, runs a beam search of
//! width `ef_construction` followed by the neighbor-selection heuristic:
//! a candidate `e` is kept only if it is closer to the inserted point than to
//! every neighbor selected before it. Reverse links are added and overfull
//! lists are re-pruned with the same heuristic. Base-layer capacity is `2M`,
//! upper layers hold `M`.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::queue::{Candidate, VisitedSet};
use crate::{Error, Result, VectorSet};

const MAX_LEVEL: usize = 31;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphParams {
    /// `M`: neighbors selected per insertion and upper-layer capacity.
    pub max_degree: usize,
    pub ef_construction: usize,
    /// Seed for level assignment.
    pub seed: u64,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            max_degree: 16,
            ef_construction: 200,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchGraph {
    dim: usize,
    max_degree: usize,
    ef_construction: usize,
    entry_point: u32,
    node_levels: Vec<u8>,
    /// `layers[level][node]`; nodes above their own level have empty lists.
    layers: Vec<Vec<Vec<u32>>>,
}

impl SearchGraph {
    /// Single-layer graph from explicit base adjacency lists.
    pub fn from_adjacency(base: Vec<Vec<u32>>, entry_point: u32, dim: usize) -> Result<Self> {
        let n = base.len();
        let max_degree = base
            .iter()
            .map(Vec::len)
            .max()
            .unwrap_or(0)
            .div_ceil(2)
            .max(1);
        Self::from_layers(
            vec![base],
            vec![0; n],
            entry_point,
            dim,
            max_degree,
            max_degree,
        )
    }

    /// Assembles a graph from raw parts and checks every structural invariant.
    pub fn from_layers(
        layers: Vec<Vec<Vec<u32>>>,
        node_levels: Vec<u8>,
        entry_point: u32,
        dim: usize,
        max_degree: usize,
        ef_construction: usize,
    ) -> Result<Self> {
        let graph = Self {
            dim,
            max_degree,
            ef_construction,
            entry_point,
            node_levels,
            layers,
        };
        graph.validate()?;
        Ok(graph)
    }

    fn validate(&self) -> Result<()> {
        let n = self.node_levels.len();
        let bad = |msg: alloc::string::String| Err(Error::InvalidParameter(msg));
        if n == 0 || self.layers.is_empty() {
            return Err(Error::Empty("graph has no nodes"));
        }
        if self.entry_point as usize >= n {
            return bad(alloc::format!(
                "entry point {} out of range",
                self.entry_point
            ));
        }
        let top = self.layers.len() - 1;
        if self.node_levels[self.entry_point as usize] as usize != top {
            return bad("entry point is not on the top layer".into());
        }
        for (level, layer) in self.layers.iter().enumerate() {
            if layer.len() != n {
                return bad(alloc::format!(
                    "layer {level} has {} lists for {n} nodes",
                    layer.len()
                ));
            }
            let cap = self.capacity(level);
            for (node, list) in layer.iter().enumerate() {
                if list.is_empty() {
                    continue;
                }
                if (self.node_levels[node] as usize) < level {
                    return bad(alloc::format!("node {node} has links above its level"));
                }
                if list.len() > cap {
                    return bad(alloc::format!(
                        "node {node} exceeds capacity {cap} on layer {level}"
                    ));
                }
                for (j, &nb) in list.iter().enumerate() {
                    if nb as usize >= n || nb as usize == node {
                        return bad(alloc::format!("node {node} has invalid neighbor {nb}"));
                    }
                    if (self.node_levels[nb as usize] as usize) < level {
                        return bad(alloc::format!(
                            "neighbor {nb} of {node} is not on layer {level}"
                        ));
                    }
                    if list[..j].contains(&nb) {
                        return bad(alloc::format!("node {node} lists {nb} twice"));
                    }
                }
            }
        }
        if self.node_levels.iter().any(|&l| l as usize > top) {
            return bad("node level above the top layer".into());
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.node_levels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.node_levels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn ef_construction(&self) -> usize {
        self.ef_construction
    }

    pub fn entry_point(&self) -> u32 {
        self.entry_point
    }

    pub fn num_levels(&self) -> usize {
        self.layers.len()
    }

    pub fn node_level(&self, node: u32) -> usize {
        self.node_levels[node as usize] as usize
    }

    pub fn node_levels(&self) -> &[u8] {
        &self.node_levels
    }

    /// Capacity of an adjacency list on `level`.
    pub fn capacity(&self, level: usize) -> usize {
        if level == 0 {
            2 * self.max_degree
        } else {
            self.max_degree
        }
    }

    #[inline]
    pub fn neighbors(&self, level: usize, node: u32) -> &[u32] {
        &self.layers[level][node as usize]
    }

    #[inline]
    pub fn base_neighbors(&self, node: u32) -> &[u32] {
        &self.layers[0][node as usize]
    }

    pub fn layer(&self, level: usize) -> &[Vec<u32>] {
        &self.layers[level]
    }

    /// CSR offsets of the base layer: edges of node `c` occupy
    /// `offsets[c]..offsets[c + 1]` in neighbor-list order.
    pub fn base_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.len() + 1);
        offsets.push(0);
        let mut acc = 0;
        for list in &self.layers[0] {
            acc += list.len();
            offsets.push(acc);
        }
        offsets
    }

    /// Nodes reachable from the entry point on the base layer.
    pub fn reachable_from_entry(&self) -> usize {
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::new();
        seen[self.entry_point as usize] = true;
        queue.push_back(self.entry_point);
        let mut count = 1;
        while let Some(node) = queue.pop_front() {
            for &nb in self.base_neighbors(node) {
                if !seen[nb as usize] {
                    seen[nb as usize] = true;
                    count += 1;
                    queue.push_back(nb);
                }
            }
        }
        count
    }
}

/// Number of directed edges on the base layer.
pub fn edge_count(graph: &SearchGraph) -> usize {
    graph.layers[0].iter().map(Vec::len).sum()
}

/// Builds an HNSW graph over `dataset`.
pub fn build_graph(dataset: &VectorSet, params: &GraphParams) -> Result<SearchGraph> {
    if params.max_degree < 2 {
        return Err(Error::InvalidParameter("M must be at least 2".into()));
    }
    if params.ef_construction < params.max_degree {
        return Err(Error::InvalidParameter(
            "ef_construction must be at least M".into(),
        ));
    }
    let n = dataset.len();
    if n == 0 {
        return Err(Error::Empty("cannot build a graph over zero points"));
    }
    if n > u32::MAX as usize {
        return Err(Error::InvalidParameter(
            "too many points for u32 node ids".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let level_norm = 1.0 / libm::log(params.max_degree as f64);
    let node_levels: Vec<u8> = (0..n)
        .map(|_| {
            let u: f64 = 1.0 - rng.random::<f64>();
            let level = libm::floor(-libm::log(u) * level_norm) as usize;
            level.min(MAX_LEVEL) as u8
        })
        .collect();
    let top = *node_levels.iter().max().unwrap() as usize;

    let mut builder = Builder {
        data: dataset,
        m: params.max_degree,
        ef: params.ef_construction,
        layers: vec![vec![Vec::new(); n]; top + 1],
        visited: VisitedSet::new(n),
    };

    let mut entry = 0u32;
    let mut entry_level = node_levels[0] as usize;
    for id in 1..n as u32 {
        let level = node_levels[id as usize] as usize;
        builder.insert(id, level, entry, entry_level);
        if level > entry_level {
            entry = id;
            entry_level = level;
        }
    }

    Ok(SearchGraph {
        dim: dataset.dim(),
        max_degree: params.max_degree,
        ef_construction: params.ef_construction,
        entry_point: entry,
        node_levels,
        layers: builder.layers,
    })
}

struct Builder<'a> {
    data: &'a VectorSet,
    m: usize,
    ef: usize,
    layers: Vec<Vec<Vec<u32>>>,
    visited: VisitedSet,
}

impl Builder<'_> {
    #[inline]
    fn score(&self, a: u32, b: u32) -> f32 {
        self.data
            .metric()
            .score(self.data.row(a as usize), self.data.row(b as usize))
    }

    fn capacity(&self, level: usize) -> usize {
        if level == 0 {
            2 * self.m
        } else {
            self.m
        }
    }

    fn insert(&mut self, id: u32, level: usize, entry: u32, entry_level: usize) {
        let mut ep = Candidate::new(self.score(id, entry), entry);
        for lc in (level + 1..=entry_level).rev() {
            ep = self.greedy_closest(id, ep, lc);
        }
        let mut entries = vec![ep];
        for lc in (0..=level.min(entry_level)).rev() {
            let found = self.search_layer(id, &entries, lc);
            let selected = self.select_neighbors(&found, self.m);
            self.layers[lc][id as usize] = selected.iter().map(|c| c.id).collect();
            for c in &selected {
                self.link(c.id, id, c.score, lc);
            }
            entries = found;
        }
    }

    fn greedy_closest(&self, query: u32, mut best: Candidate, level: usize) -> Candidate {
        loop {
            let mut improved = false;
            for &nb in &self.layers[level][best.id as usize] {
                let cand = Candidate::new(self.score(query, nb), nb);
                if cand < best {
                    best = cand;
                    improved = true;
                }
            }
            if !improved {
                return best;
            }
        }
    }

    /// Beam search on one layer; returns up to `ef` candidates, closest first.
    fn search_layer(&mut self, query: u32, entries: &[Candidate], level: usize) -> Vec<Candidate> {
        self.visited.clear();
        let mut frontier = BinaryHeap::new();
        let mut best: BinaryHeap<Candidate> = BinaryHeap::new();
        for &e in entries {
            if self.visited.insert(e.id) {
                frontier.push(Reverse(e));
                best.push(e);
            }
        }
        while best.len() > self.ef {
            best.pop();
        }
        while let Some(Reverse(cur)) = frontier.pop() {
            if best.len() >= self.ef && cur > *best.peek().unwrap() {
                break;
            }
            for i in 0..self.layers[level][cur.id as usize].len() {
                let nb = self.layers[level][cur.id as usize][i];
                if !self.visited.insert(nb) {
                    continue;
                }
                let cand = Candidate::new(self.score(query, nb), nb);
                if best.len() < self.ef || cand < *best.peek().unwrap() {
                    frontier.push(Reverse(cand));
                    best.push(cand);
                    if best.len() > self.ef {
                        best.pop();
                    }
                }
            }
        }
        best.into_sorted_vec()
    }

    /// Neighbor-selection heuristic over `candidates` sorted closest first.
    fn select_neighbors(&self, candidates: &[Candidate], limit: usize) -> Vec<Candidate> {
        if candidates.len() <= limit {
            return candidates.to_vec();
        }
        let mut selected: Vec<Candidate> = Vec::with_capacity(limit);
        for &cand in candidates {
            if selected.len() >= limit {
                break;
            }
            let diverse = selected
                .iter()
                .all(|s| cand.score < self.score(cand.id, s.id));
            if diverse {
                selected.push(cand);
            }
        }
        selected
    }

    /// Adds the reverse link `node -> new`, re-pruning `node` if it overflows.
    fn link(&mut self, node: u32, new: u32, score: f32, level: usize) {
        let cap = self.capacity(level);
        let list = &self.layers[level][node as usize];
        if list.contains(&new) {
            return;
        }
        if list.len() < cap {
            self.layers[level][node as usize].push(new);
            return;
        }
        let mut candidates: Vec<Candidate> = list
            .iter()
            .map(|&nb| Candidate::new(self.score(node, nb), nb))
            .collect();
        candidates.push(Candidate::new(score, new));
        candidates.sort_unstable();
        let kept = self.select_neighbors(&candidates, cap);
        self.layers[level][node as usize] = kept.into_iter().map(|c| c.id).collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{knn::knn_scan, Metric};

    fn line(n: usize) -> VectorSet {
        VectorSet::new((0..n).map(|i| i as f32).collect(), 1, Metric::L2).unwrap()
    }

    #[test]
    fn single_node() {
        let g = build_graph(&line(1), &GraphParams::default()).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.entry_point(), 0);
        assert!(g.base_neighbors(0).is_empty());
        assert_eq!(edge_count(&g), 0);
    }

    #[test]
    fn evenly_spaced_neighbors_are_local() {
        let data = line(100);
        let params = GraphParams {
            max_degree: 4,
            ef_construction: 16,
            seed: 7,
        };
        let g = build_graph(&data, &params).unwrap();
        for node in 0..100u32 {
            let (nearest, _) = knn_scan(&data, data.row(node as usize), 9);
            // knn_scan includes the node itself at distance 0
            for nb in g.base_neighbors(node) {
                assert!(
                    nearest.contains(nb),
                    "node {node}: neighbor {nb} not among 8 nearest"
                );
            }
        }
        assert_eq!(g.reachable_from_entry(), 100);
    }

    #[test]
    fn ring_edge_count() {
        let base = vec![vec![1, 3], vec![0, 2], vec![1, 3], vec![2, 0]];
        let g = SearchGraph::from_adjacency(base, 0, 1).unwrap();
        assert_eq!(edge_count(&g), 8);
        assert_eq!(g.base_offsets(), vec![0, 2, 4, 6, 8]);
    }

    #[test]
    fn rejects_bad_params() {
        let data = line(10);
        let p = GraphParams {
            max_degree: 1,
            ef_construction: 10,
            seed: 0,
        };
        assert!(build_graph(&data, &p).is_err());
        let p = GraphParams {
            max_degree: 8,
            ef_construction: 4,
            seed: 0,
        };
        assert!(build_graph(&data, &p).is_err());
    }

    #[test]
    fn from_adjacency_validates() {
        assert!(SearchGraph::from_adjacency(vec![vec![0]], 0, 1).is_err());
        assert!(SearchGraph::from_adjacency(vec![vec![1, 1], vec![0]], 0, 1).is_err());
        assert!(SearchGraph::from_adjacency(vec![vec![2], vec![0]], 0, 1).is_err());
        assert!(SearchGraph::from_adjacency(vec![vec![1], vec![0]], 5, 1).is_err());
    }

    #[test]
    fn deterministic_build() {
        let data = VectorSet::new(
            (0..600)
                .map(|i| libm::sinf(i as f32 * 0.37) * 10.0)
                .collect(),
            3,
            Metric::L2,
        )
        .unwrap();
        let params = GraphParams {
            max_degree: 6,
            ef_construction: 32,
            seed: 3,
        };
        let a = build_graph(&data, &params).unwrap();
        let b = build_graph(&data, &params).unwrap();
        assert_eq!(a, b);
        let capacities_hold =
            (0..a.num_levels()).all(|l| a.layer(l).iter().all(|list| list.len() <= a.capacity(l)));
        assert!(capacities_hold);
        assert!(SearchGraph::from_layers(
            a.layers.clone(),
            a.node_levels.clone(),
            a.entry_point,
            3,
            6,
            32
        )
        .is_ok());
        assert_eq!(
            edge_count(&a),
            a.layer(0).iter().map(|l| l.len()).sum::<usize>()
        );
    }
}
