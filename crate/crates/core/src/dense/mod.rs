//! Dense retrieval over precomputed embeddings: exact (flat) scan and HNSW.

mod hnsw;
mod vectors;

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Run;
use crate::index::format::{read_file, read_json, write_file, write_json, Decoder, Encoder, FileEntry};
use crate::ranking::{RankedList, TopK};
use crate::search::run_parallel;

pub use hnsw::{HnswIndex, HnswParams};
pub use vectors::{load_vectors, write_vectors, write_vectors_jsonl, VectorStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Similarity {
    #[default]
    InnerProduct,
    Cosine,
}

impl Similarity {
    /// Similarity of two vectors given their precomputed L2 norms. Cosine
    /// against a zero vector is 0.
    pub fn score(self, a: &[f32], a_norm: f32, b: &[f32], b_norm: f32) -> f32 {
        let d = vectors::dot(a, b);
        match self {
            Similarity::InnerProduct => d,
            Similarity::Cosine => {
                let denom = a_norm * b_norm;
                if denom == 0.0 {
                    0.0
                } else {
                    d / denom
                }
            }
        }
    }
}

impl std::str::FromStr for Similarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ip" | "dot" | "inner_product" => Ok(Similarity::InnerProduct),
            "cosine" => Ok(Similarity::Cosine),
            other => Err(Error::InvalidArgument(format!(
                "unknown similarity `{other}` (expected inner_product or cosine)"
            ))),
        }
    }
}

fn check_dim(qid: &str, query: &[f32], dim: usize) -> Result<()> {
    if query.len() != dim {
        return Err(Error::DimensionMismatch {
            id: qid.to_owned(),
            expected: dim,
            found: query.len(),
        });
    }
    Ok(())
}

/// Exact top-`k` by scanning every vector.
pub fn flat_search(
    store: &VectorStore,
    qid: &str,
    query: &[f32],
    k: usize,
    similarity: Similarity,
) -> Result<RankedList> {
    check_dim(qid, query, store.dim())?;
    let qnorm = vectors::dot(query, query).sqrt();
    let mut top = TopK::new(k);
    for i in 0..store.len() {
        let s = similarity.score(query, qnorm, store.vector(i), store.norm(i));
        top.push(store.id(i), f64::from(s));
    }
    Ok(top.into_ranked_list(qid))
}

/// A searchable dense index: exact scan or HNSW graph.
#[derive(Debug, Clone, PartialEq)]
pub enum DenseIndex {
    Flat { store: VectorStore, similarity: Similarity },
    Hnsw(HnswIndex),
}

impl DenseIndex {
    pub fn flat(store: VectorStore, similarity: Similarity) -> Self {
        DenseIndex::Flat { store, similarity }
    }

    pub fn hnsw(store: VectorStore, params: HnswParams, similarity: Similarity) -> Result<Self> {
        Ok(DenseIndex::Hnsw(HnswIndex::build(store, params, similarity)?))
    }

    pub fn store(&self) -> &VectorStore {
        match self {
            DenseIndex::Flat { store, .. } => store,
            DenseIndex::Hnsw(h) => h.store(),
        }
    }

    pub fn similarity(&self) -> Similarity {
        match self {
            DenseIndex::Flat { similarity, .. } => *similarity,
            DenseIndex::Hnsw(h) => h.similarity(),
        }
    }

    /// Top-`k` for one query. `ef_search` applies to HNSW only and defaults
    /// to the build-time setting.
    pub fn search(&self, qid: &str, query: &[f32], k: usize, ef_search: Option<usize>) -> Result<RankedList> {
        match self {
            DenseIndex::Flat { store, similarity } => flat_search(store, qid, query, k, *similarity),
            DenseIndex::Hnsw(h) => h.search(qid, query, k, ef_search.unwrap_or(h.params().ef_search)),
        }
    }

    /// Searches every query vector. All dimensions are checked before any
    /// search runs; the output does not depend on `threads`.
    pub fn batch_search(
        &self,
        queries: &VectorStore,
        k: usize,
        ef_search: Option<usize>,
        threads: usize,
    ) -> Result<Run> {
        let dim = self.store().dim();
        if queries.dim() != dim {
            let qid = queries.ids().first().cloned().unwrap_or_default();
            return Err(Error::DimensionMismatch {
                id: qid,
                expected: dim,
                found: queries.dim(),
            });
        }
        let rows: Vec<(&str, &[f32])> = queries.rows().collect();
        let lists = run_parallel(threads, || {
            rows.par_iter()
                .map(|(qid, q)| self.search(qid, q, k, ef_search))
                .collect::<Result<Vec<_>>>()
        })??;
        Ok(Run::from_lists(crate::eval::DEFAULT_TAG, lists))
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = BTreeMap::new();
        write_file(dir, VECTORS_FILE, &self.store().to_bytes(), &mut files)?;
        let (kind, hnsw, entry_point) = match self {
            DenseIndex::Flat { .. } => (DenseKind::Flat, None, None),
            DenseIndex::Hnsw(h) => {
                let mut enc = Encoder::default();
                for layers in h.links() {
                    enc.u32(layers.len() as u32);
                    for links in layers {
                        enc.u32(links.len() as u32);
                        enc.u32s(links);
                    }
                }
                write_file(dir, GRAPH_FILE, &enc.into_inner(), &mut files)?;
                (DenseKind::Hnsw, Some(*h.params()), Some(h.entry_point()))
            }
        };
        let manifest = DenseManifest {
            format: DENSE_FORMAT.to_owned(),
            version: DENSE_VERSION,
            kind,
            similarity: self.similarity(),
            dim: self.store().dim(),
            count: self.store().len(),
            hnsw,
            entry_point,
            files,
        };
        write_json(&dir.join(crate::index::MANIFEST_FILE), &manifest)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest: DenseManifest = read_json(&dir.join(crate::index::MANIFEST_FILE))?;
        if manifest.format != DENSE_FORMAT {
            return Err(Error::corrupt(
                crate::index::MANIFEST_FILE,
                "not a dense index manifest",
            ));
        }
        if manifest.version != DENSE_VERSION {
            return Err(Error::Version {
                found: manifest.version,
                expected: DENSE_VERSION,
            });
        }
        let data = read_file(dir, VECTORS_FILE, &manifest.files)?;
        let store = VectorStore::from_bytes(VECTORS_FILE, &data)?;
        if store.dim() != manifest.dim || store.len() != manifest.count {
            return Err(Error::corrupt(VECTORS_FILE, "shape disagrees with manifest"));
        }
        match manifest.kind {
            DenseKind::Flat => Ok(DenseIndex::flat(store, manifest.similarity)),
            DenseKind::Hnsw => {
                let params = manifest
                    .hnsw
                    .ok_or_else(|| Error::corrupt(crate::index::MANIFEST_FILE, "missing hnsw params"))?;
                let entry = manifest
                    .entry_point
                    .ok_or_else(|| Error::corrupt(crate::index::MANIFEST_FILE, "missing entry point"))?;
                let data = read_file(dir, GRAPH_FILE, &manifest.files)?;
                let mut dec = Decoder::new(GRAPH_FILE, &data);
                let mut links = Vec::with_capacity(store.len());
                for _ in 0..store.len() {
                    let levels = dec.u32()? as usize;
                    let mut layers = Vec::with_capacity(levels);
                    for _ in 0..levels {
                        let n = dec.u32()? as usize;
                        layers.push(dec.u32s(n)?);
                    }
                    links.push(layers);
                }
                dec.finish()?;
                Ok(DenseIndex::Hnsw(HnswIndex::from_parts(
                    store,
                    manifest.similarity,
                    params,
                    links,
                    entry,
                )?))
            }
        }
    }
}

const DENSE_FORMAT: &str = "ferret-dense-index";
const DENSE_VERSION: u32 = 1;
const VECTORS_FILE: &str = "vectors.bin";
const GRAPH_FILE: &str = "graph.bin";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DenseKind {
    Flat,
    Hnsw,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DenseManifest {
    format: String,
    version: u32,
    kind: DenseKind,
    similarity: Similarity,
    dim: usize,
    count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hnsw: Option<HnswParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entry_point: Option<u32>,
    files: BTreeMap<String, FileEntry>,
}
