//! First-stage retrieval: BM25 over an on-disk inverted index, exact and
//! HNSW dense search, sparse–dense fusion, TREC-style evaluation and a
//! config-driven regression harness.
//!
//! ```no_run
//! use ferret::{build_index, ingest, Bm25Params, IndexBuildOptions};
//!
//! let docs = ingest("corpus/")?;
//! let index = build_index(docs.documents(), &IndexBuildOptions::default(), "index/")?;
//! let hits = index.search("q1", "lobster roll", 10, Bm25Params::default());
//! for hit in &hits.hits {
//!     println!("{} {} {:.6}", hit.rank, hit.docid, hit.score);
//! }
//! # Ok::<(), ferret::Error>(())
//! ```

pub mod analysis;
pub mod collection;
pub mod dense;
pub mod error;
pub mod eval;
pub mod hybrid;
pub mod index;
pub mod ranking;
pub mod regress;
pub mod search;

pub use analysis::{analyze, porter_stem, tokenize, AnalyzerConfig, StemmerKind, Token};
pub use collection::{ingest, JsonCollection, JsonDocument};
pub use dense::{flat_search, load_vectors, DenseIndex, HnswIndex, HnswParams, Similarity, VectorStore};
pub use error::{Error, Result};
pub use eval::{evaluate, load_qrels, load_topics, Metric, Qrels, Run, RunFormat, Topics};
pub use hybrid::{fuse, hybrid_batch, HybridParams};
pub use index::{build_index, load_index, IndexBuildOptions, SparseIndex};
pub use ranking::{RankedList, ScoredDoc};
pub use regress::{run_regression, RegressionOutcome, RegressionSpec};
pub use search::{Bm25Params, IndexReader};

/// Directory for downloaded or derived resources: `$FERRET_CACHE`, else
/// `$HOME/.cache/ferret`, else `.ferret-cache` in the working directory.
pub fn cache_dir() -> std::path::PathBuf {
    if let Some(dir) = std::env::var_os("FERRET_CACHE").filter(|d| !d.is_empty()) {
        return dir.into();
    }
    match std::env::var_os("HOME").filter(|d| !d.is_empty()) {
        Some(home) => std::path::Path::new(&home).join(".cache").join("ferret"),
        None => ".ferret-cache".into(),
    }
}
