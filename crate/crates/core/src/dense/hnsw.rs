//! Hierarchical navigable small world graphs.
//!
//! Nodes are inserted in store order. Each node draws its top layer as
//! `floor(-ln(u) / ln(M))` from a seeded ChaCha generator, so a build is a
//! pure function of (store, params, similarity). Neighbors are chosen with
//! the diversity heuristic (no candidate extension, pruned connections
//! discarded). Layer 0 keeps up to `2M` links per node, upper layers `M`.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{Similarity, VectorStore};
use crate::error::{Error, Result};
use crate::ranking::{RankedList, TopK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HnswParams {
    #[serde(rename = "M")]
    pub m: usize,
    pub ef_construction: usize,
    pub ef_search: usize,
    pub seed: u64,
}

impl Default for HnswParams {
    fn default() -> Self {
        HnswParams {
            m: 16,
            ef_construction: 200,
            ef_search: 128,
            seed: 42,
        }
    }
}

impl HnswParams {
    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::InvalidArgument(format!("M must be ≥ 2, got {}", self.m)));
        }
        if self.ef_construction < self.m {
            return Err(Error::InvalidArgument(format!(
                "ef_construction ({}) must be ≥ M ({})",
                self.ef_construction, self.m
            )));
        }
        if self.ef_search == 0 {
            return Err(Error::InvalidArgument("ef_search must be ≥ 1".into()));
        }
        Ok(())
    }

    fn max_links(&self, layer: usize) -> usize {
        if layer == 0 {
            2 * self.m
        } else {
            self.m
        }
    }
}

/// A node and its similarity to the current query. Greater is better; ties
/// prefer the lower node id.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    sim: f32,
    node: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sim.total_cmp(&other.sim).then_with(|| other.node.cmp(&self.node))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HnswIndex {
    store: VectorStore,
    similarity: Similarity,
    params: HnswParams,
    /// `links[node][layer]`, for layers `0..=level(node)`.
    links: Vec<Vec<Vec<u32>>>,
    entry_point: u32,
    max_level: usize,
}

impl HnswIndex {
    pub fn build(store: VectorStore, params: HnswParams, similarity: Similarity) -> Result<Self> {
        params.validate()?;
        if store.is_empty() {
            return Err(Error::InvalidArgument("cannot build HNSW over an empty store".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let level_mult = 1.0 / (params.m as f64).ln();
        let mut index = HnswIndex {
            store,
            similarity,
            params,
            links: Vec::new(),
            entry_point: 0,
            max_level: 0,
        };
        for node in 0..index.store.len() as u32 {
            // u in (0, 1]
            let u = 1.0 - rng.random::<f64>();
            let level = (-u.ln() * level_mult).floor() as usize;
            index.insert(node, level);
        }
        Ok(index)
    }

    fn sim_to_query(&self, query: &[f32], query_norm: f32, node: u32) -> f32 {
        let n = node as usize;
        self.similarity
            .score(query, query_norm, self.store.vector(n), self.store.norm(n))
    }

    fn sim_between(&self, a: u32, b: u32) -> f32 {
        let (a, b) = (a as usize, b as usize);
        self.similarity.score(
            self.store.vector(a),
            self.store.norm(a),
            self.store.vector(b),
            self.store.norm(b),
        )
    }

    fn insert(&mut self, node: u32, level: usize) {
        self.links.push(vec![Vec::new(); level + 1]);
        if node == 0 {
            self.entry_point = 0;
            self.max_level = level;
            return;
        }
        let query = self.store.vector(node as usize).to_vec();
        let qnorm = self.store.norm(node as usize);

        let mut entry = Candidate {
            sim: self.sim_to_query(&query, qnorm, self.entry_point),
            node: self.entry_point,
        };
        for layer in (level + 1..=self.max_level).rev() {
            entry = self.greedy_closest(&query, qnorm, entry, layer);
        }
        let mut entries = vec![entry];
        for layer in (0..=level.min(self.max_level)).rev() {
            let found = self.search_layer(&query, qnorm, &entries, self.params.ef_construction, layer);
            let selected = self.select_neighbors(found.clone(), self.params.m);
            self.links[node as usize][layer] = selected.iter().map(|c| c.node).collect();
            for c in &selected {
                self.connect(c.node, node, layer);
            }
            entries = found;
        }
        if level > self.max_level {
            self.max_level = level;
            self.entry_point = node;
        }
    }

    /// Adds `new` to `node`'s links at `layer`, re-selecting with the
    /// heuristic when the list overflows.
    fn connect(&mut self, node: u32, new: u32, layer: usize) {
        let max = self.params.max_links(layer);
        let links = &mut self.links[node as usize][layer];
        links.push(new);
        if links.len() <= max {
            return;
        }
        let current = links.clone();
        let candidates = current
            .into_iter()
            .map(|n| Candidate {
                sim: self.sim_between(node, n),
                node: n,
            })
            .collect();
        let kept = self.select_neighbors(candidates, max);
        self.links[node as usize][layer] = kept.into_iter().map(|c| c.node).collect();
    }

    /// Keeps a candidate only if it is more similar to the base than to
    /// every candidate already kept. Returns at most `m`, best first.
    fn select_neighbors(&self, mut candidates: Vec<Candidate>, m: usize) -> Vec<Candidate> {
        candidates.sort_by(|a, b| b.cmp(a));
        let mut kept: Vec<Candidate> = Vec::with_capacity(m);
        for c in candidates {
            if kept.len() >= m {
                break;
            }
            if kept.iter().all(|r| c.sim > self.sim_between(c.node, r.node)) {
                kept.push(c);
            }
        }
        kept
    }

    fn greedy_closest(&self, query: &[f32], qnorm: f32, mut best: Candidate, layer: usize) -> Candidate {
        loop {
            let mut improved = false;
            for &n in &self.links[best.node as usize][layer] {
                let c = Candidate {
                    sim: self.sim_to_query(query, qnorm, n),
                    node: n,
                };
                if c > best {
                    best = c;
                    improved = true;
                }
            }
            if !improved {
                return best;
            }
        }
    }

    /// Beam search on one layer; returns up to `ef` nodes, best first.
    fn search_layer(
        &self,
        query: &[f32],
        qnorm: f32,
        entries: &[Candidate],
        ef: usize,
        layer: usize,
    ) -> Vec<Candidate> {
        let mut visited: HashSet<u32> = entries.iter().map(|c| c.node).collect();
        let mut frontier: BinaryHeap<Candidate> = entries.iter().copied().collect();
        let mut results: BinaryHeap<Reverse<Candidate>> = entries.iter().copied().map(Reverse).collect();
        while results.len() > ef {
            results.pop();
        }
        while let Some(current) = frontier.pop() {
            let worst = results.peek().expect("results never empty").0;
            if current < worst && results.len() >= ef {
                break;
            }
            for &n in &self.links[current.node as usize][layer] {
                if !visited.insert(n) {
                    continue;
                }
                let c = Candidate {
                    sim: self.sim_to_query(query, qnorm, n),
                    node: n,
                };
                let worst = results.peek().expect("results never empty").0;
                if results.len() < ef || c > worst {
                    frontier.push(c);
                    results.push(Reverse(c));
                    if results.len() > ef {
                        results.pop();
                    }
                }
            }
        }
        let mut out: Vec<Candidate> = results.into_iter().map(|r| r.0).collect();
        out.sort_by(|a, b| b.cmp(a));
        out
    }

    /// Approximate top-`k`. The frontier size is `max(ef_search, k)`.
    pub fn search(&self, qid: &str, query: &[f32], k: usize, ef_search: usize) -> Result<RankedList> {
        if query.len() != self.store.dim() {
            return Err(Error::DimensionMismatch {
                id: qid.to_owned(),
                expected: self.store.dim(),
                found: query.len(),
            });
        }
        let qnorm = super::vectors::dot(query, query).sqrt();
        let mut entry = Candidate {
            sim: self.sim_to_query(query, qnorm, self.entry_point),
            node: self.entry_point,
        };
        for layer in (1..=self.max_level).rev() {
            entry = self.greedy_closest(query, qnorm, entry, layer);
        }
        let found = self.search_layer(query, qnorm, &[entry], ef_search.max(k), 0);
        let mut top = TopK::new(k);
        for c in found {
            top.push(self.store.id(c.node as usize), f64::from(c.sim));
        }
        Ok(top.into_ranked_list(qid))
    }

    pub fn store(&self) -> &VectorStore {
        &self.store
    }

    pub fn similarity(&self) -> Similarity {
        self.similarity
    }

    pub fn params(&self) -> &HnswParams {
        &self.params
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn entry_point(&self) -> u32 {
        self.entry_point
    }

    /// Top layer of `node`.
    pub fn level(&self, node: u32) -> usize {
        self.links[node as usize].len() - 1
    }

    pub fn neighbors(&self, node: u32, layer: usize) -> &[u32] {
        &self.links[node as usize][layer]
    }

    /// Every directed edge as `(layer, from, to)`, sorted.
    pub fn edges(&self) -> Vec<(usize, u32, u32)> {
        let mut edges = Vec::new();
        for (node, layers) in self.links.iter().enumerate() {
            for (layer, links) in layers.iter().enumerate() {
                edges.extend(links.iter().map(|&n| (layer, node as u32, n)));
            }
        }
        edges.sort_unstable();
        edges
    }

    pub(crate) fn links(&self) -> &[Vec<Vec<u32>>] {
        &self.links
    }

    pub(crate) fn from_parts(
        store: VectorStore,
        similarity: Similarity,
        params: HnswParams,
        links: Vec<Vec<Vec<u32>>>,
        entry_point: u32,
    ) -> Result<Self> {
        let n = store.len();
        if links.len() != n || entry_point as usize >= n {
            return Err(Error::corrupt("graph.bin", "graph does not match vector count"));
        }
        if links.iter().flatten().flatten().any(|&t| t as usize >= n) {
            return Err(Error::corrupt("graph.bin", "link to unknown node"));
        }
        let max_level = links[entry_point as usize].len().saturating_sub(1);
        Ok(HnswIndex {
            store,
            similarity,
            params,
            links,
            entry_point,
            max_level,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_store(n: usize, dim: usize, seed: u64) -> VectorStore {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        VectorStore::from_rows(
            dim,
            (0..n).map(|i| {
                (
                    format!("v{i:05}"),
                    (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect(),
                )
            }),
        )
        .unwrap()
    }

    #[test]
    fn single_vector() {
        let store = VectorStore::from_rows(2, [("only".into(), vec![0.3, 0.4])]).unwrap();
        let index = HnswIndex::build(store, HnswParams::default(), Similarity::InnerProduct).unwrap();
        let list = index.search("q", &[1.0, 0.0], 5, 10).unwrap();
        assert_eq!(list.docids().collect::<Vec<_>>(), ["only"]);
        assert!((list.hits[0].score - 0.3).abs() < 1e-7);
    }

    #[test]
    fn build_is_deterministic() {
        let params = HnswParams {
            m: 6,
            ef_construction: 30,
            ..HnswParams::default()
        };
        let a = HnswIndex::build(random_store(400, 8, 1), params, Similarity::InnerProduct).unwrap();
        let b = HnswIndex::build(random_store(400, 8, 1), params, Similarity::InnerProduct).unwrap();
        assert_eq!(a.edges(), b.edges());
        assert_eq!(a.entry_point(), b.entry_point());
        let c = HnswIndex::build(
            random_store(400, 8, 1),
            HnswParams { seed: 7, ..params },
            Similarity::InnerProduct,
        )
        .unwrap();
        assert_ne!(a.edges(), c.edges());
    }

    #[test]
    fn degree_bounds() {
        let params = HnswParams {
            m: 4,
            ef_construction: 20,
            ..HnswParams::default()
        };
        let index = HnswIndex::build(random_store(1000, 8, 3), params, Similarity::Cosine).unwrap();
        for node in 0..1000u32 {
            for layer in 0..=index.level(node) {
                let cap = if layer == 0 { 8 } else { 4 };
                assert!(index.neighbors(node, layer).len() <= cap);
            }
        }
        assert!(index.max_level() >= 1);
    }

    #[test]
    fn rejects_bad_params_and_dimensions() {
        let store = random_store(10, 4, 0);
        let bad = HnswParams {
            m: 1,
            ..HnswParams::default()
        };
        assert!(HnswIndex::build(store.clone(), bad, Similarity::InnerProduct).is_err());
        let bad = HnswParams {
            m: 16,
            ef_construction: 8,
            ..HnswParams::default()
        };
        assert!(HnswIndex::build(store.clone(), bad, Similarity::InnerProduct).is_err());
        let index = HnswIndex::build(store, HnswParams::default(), Similarity::InnerProduct).unwrap();
        assert!(matches!(
            index.search("q7", &[1.0], 1, 10),
            Err(Error::DimensionMismatch { ref id, .. }) if id == "q7"
        ));
    }
}
