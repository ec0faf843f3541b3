//! Read access to index internals: dictionary, postings, document vectors
//! and per-term BM25 weights.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::{SparseIndex, StoredDocument, TermRecord};
use crate::search::{bm25_score, Bm25Params};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Posting {
    pub doc: u32,
    pub docid: String,
    pub tf: u32,
    pub positions: Vec<u32>,
}

#[derive(Clone, Copy)]
pub struct IndexReader<'a> {
    index: &'a SparseIndex,
}

impl<'a> IndexReader<'a> {
    pub fn new(index: &'a SparseIndex) -> Self {
        IndexReader { index }
    }

    pub fn index(&self) -> &'a SparseIndex {
        self.index
    }

    /// The full dictionary in lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = &'a TermRecord> {
        self.index.terms().iter()
    }

    /// Analyzed forms of `text` under the index's analyzer.
    pub fn analyze(&self, text: &str) -> Vec<String> {
        self.index
            .analyzer()
            .analyze(text)
            .into_iter()
            .map(|t| t.term)
            .collect()
    }

    /// Resolves a user-supplied term to its index form. An unanalyzed term
    /// that does not analyze to exactly one token resolves to nothing.
    fn resolve(&self, term: &str, analyzed: bool) -> Option<u32> {
        if analyzed {
            return self.index.term_id(term);
        }
        match self.analyze(term).as_slice() {
            [single] => self.index.term_id(single),
            _ => None,
        }
    }

    /// `(df, cf)` for `term`; `(0, 0)` when absent. With `analyzed == false`
    /// the term goes through the analyzer first.
    pub fn term_counts(&self, term: &str, analyzed: bool) -> (u32, u64) {
        self.resolve(term, analyzed)
            .map(|id| {
                let rec = self.index.term(id);
                (rec.df, rec.cf)
            })
            .unwrap_or((0, 0))
    }

    pub fn postings(&self, term: &str, analyzed: bool) -> Result<Vec<Posting>> {
        if !self.index.has_positions() {
            return Err(Error::PositionsNotStored);
        }
        let Some(id) = self.resolve(term, analyzed) else {
            return Ok(Vec::new());
        };
        Ok(self
            .index
            .postings(id)
            .iter()
            .map(|p| Posting {
                doc: p.doc,
                docid: self.index.docid(p.doc).to_owned(),
                tf: p.tf,
                positions: p.positions.unwrap_or_default().to_vec(),
            })
            .collect())
    }

    fn ordinal(&self, docid: &str) -> Result<u32> {
        self.index
            .doc_ordinal(docid)
            .ok_or_else(|| Error::UnknownDocId(docid.to_owned()))
    }

    /// Term → tf for every analyzed term of the document.
    pub fn doc_vector(&self, docid: &str) -> Result<BTreeMap<String, u32>> {
        let ord = self.ordinal(docid)?;
        let fwd = self.index.forward()?;
        Ok(fwd
            .doc(ord)
            .map(|(id, tf, _)| (self.index.term(id).term.clone(), tf))
            .collect())
    }

    /// Term → positions for every analyzed term of the document.
    pub fn term_positions(&self, docid: &str) -> Result<BTreeMap<String, Vec<u32>>> {
        let ord = self.ordinal(docid)?;
        let fwd = self.index.forward()?;
        if !self.index.has_positions() {
            return Err(Error::PositionsNotStored);
        }
        Ok(fwd
            .doc(ord)
            .map(|(id, _, pos)| (self.index.term(id).term.clone(), pos.unwrap_or_default().to_vec()))
            .collect())
    }

    /// BM25 weight of an analyzed `term` in `docid`; 0 if the term does not
    /// occur there.
    pub fn bm25_weight(&self, docid: &str, term: &str, p: Bm25Params) -> Result<f64> {
        let ord = self.ordinal(docid)?;
        let fwd = self.index.forward()?;
        let Some(id) = self.index.term_id(term) else {
            return Ok(0.0);
        };
        let tf = fwd.doc(ord).find(|(t, _, _)| *t == id).map(|(_, tf, _)| tf);
        Ok(match tf {
            Some(tf) => bm25_score(
                tf,
                self.index.term(id).df,
                self.index.doc_length(ord),
                self.index.stats(),
                p,
            ),
            None => 0.0,
        })
    }

    /// Stored contents (and raw record, if any) exactly as ingested.
    pub fn fetch_doc(&self, docid: &str) -> Result<&'a StoredDocument> {
        let ord = self.ordinal(docid)?;
        self.index.stored_document(ord)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::AnalyzerConfig;
    use crate::collection::JsonDocument;
    use crate::index::{build_index, IndexBuildOptions};

    fn toy(dir: &std::path::Path, opts: &IndexBuildOptions) -> SparseIndex {
        let mut docs = vec![
            JsonDocument::new("d1", "a cat"),
            JsonDocument::new("d2", "cat cat dog"),
            JsonDocument::new("d3", "dog"),
        ];
        docs[2].raw = Some(r#"{"id":"d3","contents":"dog","extra":[1,2]}"#.into());
        build_index(docs.into_iter().map(Ok), opts, dir).unwrap()
    }

    #[test]
    fn dictionary_and_counts() {
        let dir = tempfile::tempdir().unwrap();
        let index = toy(dir.path(), &IndexBuildOptions::full(AnalyzerConfig::plain()));
        let reader = IndexReader::new(&index);
        let first = reader.terms().next().unwrap();
        assert_eq!((first.term.as_str(), first.df, first.cf), ("a", 1, 1));
        assert_eq!(reader.terms().count() as u64, index.manifest().num_terms);
        assert_eq!(reader.term_counts("cat", true), (2, 3));
        assert_eq!(reader.term_counts("CAT", false), (2, 3));
        assert_eq!(reader.term_counts("zebra", true), (0, 0));
    }

    #[test]
    fn single_doc_dictionary() {
        let dir = tempfile::tempdir().unwrap();
        let index = build_index(
            [Ok(JsonDocument::new("only", "x x"))],
            &IndexBuildOptions::full(AnalyzerConfig::plain()),
            dir.path(),
        )
        .unwrap();
        let recs: Vec<_> = IndexReader::new(&index).terms().cloned().collect();
        assert_eq!(
            recs,
            [TermRecord {
                term: "x".into(),
                df: 1,
                cf: 2
            }]
        );
    }

    #[test]
    fn atomic_resolves_to_atom() {
        let dir = tempfile::tempdir().unwrap();
        let docs = [Ok(JsonDocument::new("a", "atomic atoms and the atom"))];
        let index = build_index(docs, &IndexBuildOptions::full(AnalyzerConfig::default()), dir.path()).unwrap();
        let reader = IndexReader::new(&index);
        assert_eq!(reader.analyze("atomic"), ["atom"]);
        assert_eq!(reader.term_counts("atomic", false), reader.term_counts("atom", true));
        assert_eq!(reader.term_counts("atom", true), (1, 3));
        assert_eq!(reader.term_counts("atomic", true), (0, 0));
    }

    #[test]
    fn postings_and_positions() {
        let dir = tempfile::tempdir().unwrap();
        let index = toy(dir.path(), &IndexBuildOptions::full(AnalyzerConfig::plain()));
        let reader = IndexReader::new(&index);
        let got: Vec<_> = reader
            .postings("cat", true)
            .unwrap()
            .into_iter()
            .map(|p| (p.docid, p.tf, p.positions))
            .collect();
        assert_eq!(got, [("d1".to_string(), 1, vec![1]), ("d2".to_string(), 2, vec![0, 1])]);
        assert!(reader.postings("zebra", true).unwrap().is_empty());

        let no_pos = tempfile::tempdir().unwrap();
        let opts = IndexBuildOptions {
            store_positions: false,
            ..IndexBuildOptions::full(AnalyzerConfig::plain())
        };
        let index = toy(no_pos.path(), &opts);
        let reader = IndexReader::new(&index);
        assert!(matches!(reader.postings("cat", true), Err(Error::PositionsNotStored)));
        assert!(matches!(reader.term_positions("d2"), Err(Error::PositionsNotStored)));
    }

    #[test]
    fn document_vectors() {
        let dir = tempfile::tempdir().unwrap();
        let index = toy(dir.path(), &IndexBuildOptions::full(AnalyzerConfig::plain()));
        let reader = IndexReader::new(&index);
        let tf = reader.doc_vector("d2").unwrap();
        assert_eq!(tf, BTreeMap::from([("cat".into(), 2), ("dog".into(), 1)]));
        assert_eq!(tf.values().sum::<u32>(), index.doc_length(1));
        let pos = reader.term_positions("d2").unwrap();
        assert_eq!(
            pos,
            BTreeMap::from([("cat".into(), vec![0, 1]), ("dog".into(), vec![2])])
        );
        assert!(matches!(reader.doc_vector("nope"), Err(Error::UnknownDocId(_))));
    }

    #[test]
    fn bm25_weights() {
        let dir = tempfile::tempdir().unwrap();
        let index = toy(dir.path(), &IndexBuildOptions::full(AnalyzerConfig::plain()));
        let reader = IndexReader::new(&index);
        let p = Bm25Params::default();
        let w = reader.bm25_weight("d2", "cat", p).unwrap();
        assert!((w - 0.579_874_607_510_972).abs() < 1e-12);
        assert_eq!(reader.bm25_weight("d3", "cat", p).unwrap(), 0.0);
        assert_eq!(reader.bm25_weight("d3", "zebra", p).unwrap(), 0.0);
        assert!(reader.bm25_weight("nope", "cat", p).is_err());
    }

    #[test]
    fn docvectors_not_stored() {
        let dir = tempfile::tempdir().unwrap();
        let opts = IndexBuildOptions {
            store_docvectors: false,
            ..IndexBuildOptions::full(AnalyzerConfig::plain())
        };
        let index = toy(dir.path(), &opts);
        let reader = IndexReader::new(&index);
        assert!(matches!(reader.doc_vector("d1"), Err(Error::DocvectorsNotStored)));
        assert!(matches!(
            reader.bm25_weight("d1", "cat", Bm25Params::default()),
            Err(Error::DocvectorsNotStored)
        ));
    }

    #[test]
    fn fetch_stored_documents() {
        let dir = tempfile::tempdir().unwrap();
        let index = toy(dir.path(), &IndexBuildOptions::full(AnalyzerConfig::plain()));
        let reader = IndexReader::new(&index);
        assert_eq!(reader.fetch_doc("d1").unwrap().contents, "a cat");
        assert_eq!(
            reader.fetch_doc("d3").unwrap().raw.as_deref(),
            Some(r#"{"id":"d3","contents":"dog","extra":[1,2]}"#)
        );
        assert!(matches!(reader.fetch_doc("zz"), Err(Error::UnknownDocId(_))));

        let bare = tempfile::tempdir().unwrap();
        let index = toy(
            bare.path(),
            &IndexBuildOptions {
                analyzer: AnalyzerConfig::plain(),
                ..Default::default()
            },
        );
        assert!(matches!(
            IndexReader::new(&index).fetch_doc("d1"),
            Err(Error::RawNotStored)
        ));
    }
}
