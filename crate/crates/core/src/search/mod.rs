//! BM25 retrieval over a [`SparseIndex`].

mod maxp;
mod reader;
mod tune;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{Run, Topics};
use crate::index::{CollectionStats, SparseIndex};
use crate::ranking::{RankedList, TopK};

pub use maxp::aggregate_max_passage;
pub use reader::{IndexReader, Posting};
pub use tune::{parse_grid, tune_grid, GridPoint, TuneOptions, TuneResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self> {
        let p = Bm25Params { k1, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1.is_finite() && self.k1 >= 0.0) {
            return Err(Error::InvalidArgument(format!("k1 must be ≥ 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidArgument(format!("b must be in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

/// `ln(1 + (N − df + 0.5) / (df + 0.5))`
pub fn bm25_idf(df: u32, doc_count: u32) -> f64 {
    let n = f64::from(doc_count);
    let df = f64::from(df);
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

fn bm25_tf_part(tf: u32, dl: u32, avgdl: f64, p: Bm25Params) -> f64 {
    let tf = f64::from(tf);
    let norm = p.k1 * (1.0 - p.b + p.b * f64::from(dl) / avgdl);
    tf * (p.k1 + 1.0) / (tf + norm)
}

/// BM25 weight of one term in one document, using exact document lengths.
///
/// Panics if `tf == 0` or `df` is outside `1..=N`.
pub fn bm25_score(tf: u32, df: u32, dl: u32, stats: &CollectionStats, p: Bm25Params) -> f64 {
    assert!(tf >= 1, "bm25_score: tf must be ≥ 1");
    assert!(
        df >= 1 && df <= stats.doc_count,
        "bm25_score: df {df} outside 1..={}",
        stats.doc_count
    );
    bm25_idf(df, stats.doc_count) * bm25_tf_part(tf, dl, stats.avg_doc_length, p)
}

struct Cursor<'a> {
    docs: &'a [u32],
    tfs: &'a [u32],
    idx: usize,
    df: u32,
    qtf: u32,
}

impl Cursor<'_> {
    fn doc(&self) -> Option<u32> {
        self.docs.get(self.idx).copied()
    }
}

impl SparseIndex {
    /// Analyzed query terms present in the index with their query frequency,
    /// in term order.
    fn query_terms(&self, query: &str) -> Vec<(u32, u32)> {
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for tok in self.analyzer().analyze(query) {
            *counts.entry(tok.term).or_default() += 1;
        }
        counts
            .into_iter()
            .filter_map(|(term, qtf)| self.term_id(&term).map(|id| (id, qtf)))
            .collect()
    }

    /// Top-`k` documents for `query` under BM25.
    ///
    /// A document's score is the sum over distinct query terms of
    /// `qtf · bm25_score(...)`. Posting lists are traversed document at a
    /// time.
    pub fn search(&self, qid: &str, query: &str, k: usize, p: Bm25Params) -> RankedList {
        let stats = self.stats();
        let mut cursors: Vec<Cursor> = self
            .query_terms(query)
            .into_iter()
            .map(|(id, qtf)| {
                let list = self.postings(id);
                Cursor {
                    docs: list.docs(),
                    tfs: list.tfs(),
                    idx: 0,
                    df: self.term(id).df,
                    qtf,
                }
            })
            .collect();
        let mut top = TopK::new(k);
        while let Some(doc) = cursors.iter().filter_map(Cursor::doc).min() {
            let dl = self.doc_length(doc);
            let mut score = 0.0;
            for c in cursors.iter_mut() {
                if c.doc() == Some(doc) {
                    score += f64::from(c.qtf) * bm25_score(c.tfs[c.idx], c.df, dl, stats, p);
                    c.idx += 1;
                }
            }
            top.push(self.docid(doc), score);
        }
        top.into_ranked_list(qid)
    }

    /// Searches every topic's `field`, spreading queries over `threads`
    /// workers. The run does not depend on the thread count.
    pub fn batch_search(&self, topics: &Topics, field: &str, k: usize, p: Bm25Params, threads: usize) -> Result<Run> {
        let queries = topics.queries(field);
        let lists = run_parallel(threads, || {
            queries
                .par_iter()
                .map(|(qid, text)| self.search(qid, text, k, p))
                .collect::<Vec<_>>()
        })?;
        Ok(Run::from_lists(crate::eval::DEFAULT_TAG, lists))
    }
}

pub(crate) fn run_parallel<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::AnalyzerConfig;
    use crate::collection::JsonDocument;
    use crate::index::{build_index, IndexBuildOptions};

    fn toy_index(dir: &std::path::Path, analyzer: AnalyzerConfig) -> SparseIndex {
        let docs =
            [("d1", "a cat"), ("d2", "cat cat dog"), ("d3", "dog")].map(|(id, text)| Ok(JsonDocument::new(id, text)));
        build_index(docs, &IndexBuildOptions::full(analyzer), dir).unwrap()
    }

    fn stats(n: u32, avgdl: f64) -> CollectionStats {
        CollectionStats {
            doc_count: n,
            total_terms: 0,
            avg_doc_length: avgdl,
            doc_lengths: Vec::new(),
        }
    }

    #[test]
    fn score_at_average_length() {
        let p = Bm25Params::default();
        let s = bm25_score(1, 7, 4, &stats(7, 4.0), p);
        let expected = (1.0 + 0.5 / 7.5f64).ln() * (p.k1 + 1.0) / (1.0 + p.k1);
        assert!((s - expected).abs() < 1e-15);
    }

    #[test]
    fn toy_weight_for_cat_in_d2() {
        // idf = ln(1.6); tf part = 3.8 / (2 + 0.9·(0.6 + 0.4·1.5)) = 3.8 / 3.08
        let s = bm25_score(2, 2, 3, &stats(3, 2.0), Bm25Params::default());
        assert!((s - 1.6f64.ln() * 3.8 / 3.08).abs() < 1e-12);
        assert!((s - 0.579_874_607_510_972).abs() < 1e-12);
    }

    #[test]
    fn score_increases_with_tf() {
        let st = stats(10, 5.0);
        let p = Bm25Params::default();
        assert!(bm25_score(3, 2, 5, &st, p) > bm25_score(2, 2, 5, &st, p));
    }

    #[test]
    #[should_panic(expected = "tf must be")]
    fn zero_tf_is_a_programming_error() {
        bm25_score(0, 1, 1, &stats(1, 1.0), Bm25Params::default());
    }

    #[test]
    fn params_validation() {
        assert!(Bm25Params::new(0.9, 0.4).is_ok());
        assert!(Bm25Params::new(-1.0, 0.4).is_err());
        assert!(Bm25Params::new(0.9, 1.5).is_err());
    }

    #[test]
    fn toy_search() {
        let dir = tempfile::tempdir().unwrap();
        let index = toy_index(dir.path(), AnalyzerConfig::plain());
        let list = index.search("q", "cat", 10, Bm25Params::default());
        assert_eq!(list.docids().collect::<Vec<_>>(), ["d2", "d1"]);
        assert!((list.hits[0].score - 0.579_874_607_510_972).abs() < 1e-12);
        assert!((list.hits[1].score - 0.470_003_629_245_736).abs() < 1e-12);
        assert!(index.search("q", "xyzzy", 10, Bm25Params::default()).is_empty());
    }

    #[test]
    fn stopword_only_query_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let index = toy_index(dir.path(), AnalyzerConfig::default());
        assert!(index.search("q", "the of a", 10, Bm25Params::default()).is_empty());
    }

    #[test]
    fn repeated_query_terms_multiply() {
        let dir = tempfile::tempdir().unwrap();
        let index = toy_index(dir.path(), AnalyzerConfig::plain());
        let once = index.search("q", "dog", 10, Bm25Params::default());
        let twice = index.search("q", "dog dog", 10, Bm25Params::default());
        for (a, b) in once.hits.iter().zip(&twice.hits) {
            assert_eq!(a.docid, b.docid);
            assert_eq!(2.0 * a.score, b.score);
        }
    }

    #[test]
    fn b_zero_ignores_length() {
        let dir = tempfile::tempdir().unwrap();
        let docs =
            [("short", "cat"), ("long", "cat dog dog dog dog")].map(|(id, text)| Ok(JsonDocument::new(id, text)));
        let index = build_index(docs, &IndexBuildOptions::full(AnalyzerConfig::plain()), dir.path()).unwrap();
        let list = index.search("q", "cat", 10, Bm25Params { k1: 0.9, b: 0.0 });
        assert_eq!(list.hits[0].score, list.hits[1].score);
        assert_eq!(list.docids().collect::<Vec<_>>(), ["long", "short"]);
    }

    #[test]
    fn batch_matches_sequential_searches() {
        let dir = tempfile::tempdir().unwrap();
        let index = toy_index(dir.path(), AnalyzerConfig::plain());
        let mut topics = Topics::new();
        topics.insert_title("q1", "cat");
        topics.insert_title("q2", "dog a");
        let p = Bm25Params::default();
        let run = index.batch_search(&topics, "title", 10, p, 4).unwrap();
        assert_eq!(run.get("q1").unwrap(), &index.search("q1", "cat", 10, p));
        assert_eq!(run.get("q2").unwrap(), &index.search("q2", "dog a", 10, p));
        assert!(index
            .batch_search(&Topics::new(), "title", 10, p, 2)
            .unwrap()
            .is_empty());
    }
}
