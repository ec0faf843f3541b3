//! Positional inverted index with an optional forward index and document
//! store.
//!
//! An index directory holds `manifest.json` plus binary segment files. All
//! integers are little-endian with fixed widths; strings are a `u32` byte
//! length followed by UTF-8:
//!
//! | file              | contents                                                        |
//! |-------------------|-----------------------------------------------------------------|
//! | `docids.bin`      | `u64 N`, then N docids in ordinal order                          |
//! | `doclens.bin`     | N × `u32` analyzed document length                              |
//! | `terms.bin`       | `u64 T`, then per term (sorted): string, `u32 df`, `u64 cf`      |
//! | `postings.bin`    | per term: df × `u32` doc ordinals, df × `u32` tf, then cf × `u32` positions if stored |
//! | `docvectors.bin`  | per doc: `u32 n`, n × `u32` term id, n × `u32` tf, then dl × `u32` positions if stored |
//! | `documents.bin`   | per doc: contents string, `u8` raw flag, raw string if flag is 1 |
//!
//! The manifest records the format version, analyzer, build options,
//! collection statistics and the size and SHA-256 of every segment file.
//! Builds are byte-identical for identical input regardless of thread count.

pub(crate) mod format;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::AnalyzerConfig;
use crate::collection::JsonDocument;
use crate::error::{Error, Result};
use format::{read_file, read_json, write_file, write_json, Decoder, Encoder, FileEntry};

pub const FORMAT_NAME: &str = "ferret-sparse-index";
pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

const DOCIDS: &str = "docids.bin";
const DOCLENS: &str = "doclens.bin";
const TERMS: &str = "terms.bin";
const POSTINGS: &str = "postings.bin";
const DOCVECTORS: &str = "docvectors.bin";
const DOCUMENTS: &str = "documents.bin";

#[derive(Debug, Clone, PartialEq)]
pub struct IndexBuildOptions {
    pub store_positions: bool,
    pub store_docvectors: bool,
    pub store_raw: bool,
    pub analyzer: AnalyzerConfig,
    /// Worker threads for document analysis. Does not affect the output.
    pub threads: usize,
}

impl Default for IndexBuildOptions {
    fn default() -> Self {
        IndexBuildOptions {
            store_positions: false,
            store_docvectors: false,
            store_raw: false,
            analyzer: AnalyzerConfig::default(),
            threads: 1,
        }
    }
}

impl IndexBuildOptions {
    /// Everything stored: positions, document vectors and raw documents.
    pub fn full(analyzer: AnalyzerConfig) -> Self {
        IndexBuildOptions {
            store_positions: true,
            store_docvectors: true,
            store_raw: true,
            analyzer,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermRecord {
    pub term: String,
    pub df: u32,
    pub cf: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectionStats {
    pub doc_count: u32,
    pub total_terms: u64,
    pub avg_doc_length: f64,
    pub doc_lengths: Vec<u32>,
}

impl CollectionStats {
    fn from_lengths(doc_lengths: Vec<u32>) -> Self {
        let total_terms: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let doc_count = doc_lengths.len() as u32;
        CollectionStats {
            doc_count,
            total_terms,
            avg_doc_length: total_terms as f64 / f64::from(doc_count),
            doc_lengths,
        }
    }
}

/// Stored text for one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StoredDocument {
    pub contents: String,
    pub raw: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexManifest {
    pub format: String,
    pub version: u32,
    pub analyzer: AnalyzerConfig,
    pub store_positions: bool,
    pub store_docvectors: bool,
    pub store_raw: bool,
    pub doc_count: u32,
    pub total_terms: u64,
    pub avg_doc_length: f64,
    pub num_terms: u64,
    pub files: BTreeMap<String, FileEntry>,
}

/// Postings for one term, stored column-wise.
#[derive(Debug, Clone, Default)]
pub struct PostingList {
    docs: Vec<u32>,
    tfs: Vec<u32>,
    /// Concatenated positions in posting order; empty when not stored.
    positions: Vec<u32>,
}

#[derive(Debug, Clone, Copy)]
pub struct PostingRef<'a> {
    pub doc: u32,
    pub tf: u32,
    pub positions: Option<&'a [u32]>,
}

impl PostingList {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> &[u32] {
        &self.docs
    }

    pub fn tfs(&self) -> &[u32] {
        &self.tfs
    }

    pub fn iter(&self) -> impl Iterator<Item = PostingRef<'_>> {
        let has_positions = !self.positions.is_empty();
        let mut offset = 0usize;
        self.docs.iter().zip(&self.tfs).map(move |(&doc, &tf)| {
            let positions = has_positions.then(|| &self.positions[offset..offset + tf as usize]);
            offset += tf as usize;
            PostingRef { doc, tf, positions }
        })
    }
}

/// Per-document term vectors, term ids ascending within each document.
#[derive(Debug, Clone, Default)]
pub struct ForwardIndex {
    entry_offsets: Vec<usize>,
    term_ids: Vec<u32>,
    tfs: Vec<u32>,
    position_offsets: Vec<usize>,
    positions: Vec<u32>,
    has_positions: bool,
}

impl ForwardIndex {
    /// `(term id, tf, positions)` for each distinct term of document `doc`.
    pub fn doc(&self, doc: u32) -> impl Iterator<Item = (u32, u32, Option<&[u32]>)> + '_ {
        let doc = doc as usize;
        let range = self.entry_offsets[doc]..self.entry_offsets[doc + 1];
        let mut pos = self.position_offsets[doc];
        range.map(move |i| {
            let tf = self.tfs[i];
            let positions = self.has_positions.then(|| &self.positions[pos..pos + tf as usize]);
            pos += tf as usize;
            (self.term_ids[i], tf, positions)
        })
    }
}

/// A loaded, immutable sparse index.
#[derive(Debug)]
pub struct SparseIndex {
    dir: PathBuf,
    manifest: IndexManifest,
    stats: CollectionStats,
    docids: Vec<String>,
    doc_lookup: HashMap<String, u32>,
    terms: Vec<TermRecord>,
    term_lookup: HashMap<String, u32>,
    postings: Vec<PostingList>,
    forward: Option<ForwardIndex>,
    documents: Option<Vec<StoredDocument>>,
}

/// Analyzed terms of one document grouped by term, sorted by term.
struct DocTerms {
    length: u32,
    terms: Vec<(String, Vec<u32>)>,
}

fn group_terms(doc: &JsonDocument, analyzer: &AnalyzerConfig) -> DocTerms {
    let tokens = analyzer.analyze(&doc.contents);
    let length = tokens.len() as u32;
    let mut grouped: BTreeMap<String, Vec<u32>> = BTreeMap::new();
    for tok in tokens {
        grouped.entry(tok.term).or_default().push(tok.position);
    }
    DocTerms {
        length,
        terms: grouped.into_iter().collect(),
    }
}

/// Builds an index from `docs` into directory `out` and returns it loaded.
pub fn build_index<I>(docs: I, opts: &IndexBuildOptions, out: impl AsRef<Path>) -> Result<SparseIndex>
where
    I: IntoIterator<Item = Result<JsonDocument>>,
{
    let out = out.as_ref();
    let mut collected = Vec::new();
    let mut seen = HashSet::new();
    for doc in docs {
        let doc = doc?;
        if !seen.insert(doc.id.clone()) {
            return Err(Error::DuplicateDocId(doc.id));
        }
        collected.push(doc);
    }
    drop(seen);
    if collected.is_empty() {
        return Err(Error::EmptyCollection);
    }
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let analyzed: Vec<DocTerms> =
        pool.install(|| collected.par_iter().map(|d| group_terms(d, &opts.analyzer)).collect());

    // Merge in ordinal order so the result is independent of scheduling.
    let mut accum: HashMap<&str, PostingList> = HashMap::new();
    for (ord, doc) in analyzed.iter().enumerate() {
        for (term, positions) in &doc.terms {
            let list = accum.entry(term.as_str()).or_default();
            list.docs.push(ord as u32);
            list.tfs.push(positions.len() as u32);
            if opts.store_positions {
                list.positions.extend_from_slice(positions);
            }
        }
    }
    let mut vocab: Vec<(&str, PostingList)> = accum.into_iter().collect();
    vocab.sort_unstable_by(|a, b| a.0.cmp(b.0));
    let term_ids: HashMap<&str, u32> = vocab.iter().enumerate().map(|(i, (t, _))| (*t, i as u32)).collect();

    let mut files = BTreeMap::new();

    let mut enc = Encoder::default();
    enc.u64(collected.len() as u64);
    for doc in &collected {
        enc.str(&doc.id);
    }
    write_file(out, DOCIDS, &enc.into_inner(), &mut files)?;

    let lengths: Vec<u32> = analyzed.iter().map(|d| d.length).collect();
    let mut enc = Encoder::default();
    enc.u32s(&lengths);
    write_file(out, DOCLENS, &enc.into_inner(), &mut files)?;

    let mut terms_enc = Encoder::default();
    let mut postings_enc = Encoder::default();
    terms_enc.u64(vocab.len() as u64);
    for (term, list) in &vocab {
        let cf: u64 = list.tfs.iter().map(|&t| u64::from(t)).sum();
        terms_enc.str(term);
        terms_enc.u32(list.docs.len() as u32);
        terms_enc.u64(cf);
        postings_enc.u32s(&list.docs);
        postings_enc.u32s(&list.tfs);
        postings_enc.u32s(&list.positions);
    }
    write_file(out, TERMS, &terms_enc.into_inner(), &mut files)?;
    write_file(out, POSTINGS, &postings_enc.into_inner(), &mut files)?;

    if opts.store_docvectors {
        let mut enc = Encoder::default();
        for doc in &analyzed {
            enc.u32(doc.terms.len() as u32);
            for (term, _) in &doc.terms {
                enc.u32(term_ids[term.as_str()]);
            }
            for (_, positions) in &doc.terms {
                enc.u32(positions.len() as u32);
            }
            if opts.store_positions {
                for (_, positions) in &doc.terms {
                    enc.u32s(positions);
                }
            }
        }
        write_file(out, DOCVECTORS, &enc.into_inner(), &mut files)?;
    }

    if opts.store_raw {
        let mut enc = Encoder::default();
        for doc in &collected {
            enc.str(&doc.contents);
            match &doc.raw {
                Some(raw) => {
                    enc.u8(1);
                    enc.str(raw);
                }
                None => enc.u8(0),
            }
        }
        write_file(out, DOCUMENTS, &enc.into_inner(), &mut files)?;
    }

    let stats = CollectionStats::from_lengths(lengths);
    let manifest = IndexManifest {
        format: FORMAT_NAME.to_owned(),
        version: FORMAT_VERSION,
        analyzer: opts.analyzer.clone(),
        store_positions: opts.store_positions,
        store_docvectors: opts.store_docvectors,
        store_raw: opts.store_raw,
        doc_count: stats.doc_count,
        total_terms: stats.total_terms,
        avg_doc_length: stats.avg_doc_length,
        num_terms: vocab.len() as u64,
        files,
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    SparseIndex::open(out)
}

/// Loads an index directory written by [`build_index`].
pub fn load_index(path: impl AsRef<Path>) -> Result<SparseIndex> {
    SparseIndex::open(path)
}

fn read_manifest(dir: &Path) -> Result<IndexManifest> {
    let value: serde_json::Value = read_json(&dir.join(MANIFEST_FILE))?;
    let format = value.get("format").and_then(|v| v.as_str());
    if format != Some(FORMAT_NAME) {
        return Err(Error::corrupt(
            MANIFEST_FILE,
            format!("not a sparse index manifest (format {format:?})"),
        ));
    }
    let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    serde_json::from_value(value).map_err(|e| Error::corrupt(MANIFEST_FILE, e.to_string()))
}

impl SparseIndex {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let dir = path.as_ref().to_path_buf();
        let manifest = read_manifest(&dir)?;
        let n = manifest.doc_count as usize;

        let data = read_file(&dir, DOCIDS, &manifest.files)?;
        let mut dec = Decoder::new(DOCIDS, &data);
        if dec.u64()? != n as u64 {
            return Err(Error::corrupt(DOCIDS, "document count disagrees with manifest"));
        }
        let docids = (0..n).map(|_| dec.str()).collect::<Result<Vec<_>>>()?;
        dec.finish()?;
        let doc_lookup: HashMap<String, u32> = docids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        if doc_lookup.len() != n {
            return Err(Error::corrupt(DOCIDS, "duplicate docids"));
        }

        let data = read_file(&dir, DOCLENS, &manifest.files)?;
        let mut dec = Decoder::new(DOCLENS, &data);
        let lengths = dec.u32s(n)?;
        dec.finish()?;
        let stats = CollectionStats::from_lengths(lengths);
        if stats.total_terms != manifest.total_terms {
            return Err(Error::corrupt(DOCLENS, "total length disagrees with manifest"));
        }

        let data = read_file(&dir, TERMS, &manifest.files)?;
        let mut dec = Decoder::new(TERMS, &data);
        let num_terms = dec.u64()?;
        if num_terms != manifest.num_terms {
            return Err(Error::corrupt(TERMS, "term count disagrees with manifest"));
        }
        let mut terms = Vec::with_capacity(num_terms as usize);
        for _ in 0..num_terms {
            let term = dec.str()?;
            let df = dec.u32()?;
            let cf = dec.u64()?;
            terms.push(TermRecord { term, df, cf });
        }
        dec.finish()?;
        let term_lookup = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.term.clone(), i as u32))
            .collect();

        let data = read_file(&dir, POSTINGS, &manifest.files)?;
        let mut dec = Decoder::new(POSTINGS, &data);
        let mut postings = Vec::with_capacity(terms.len());
        for rec in &terms {
            let docs = dec.u32s(rec.df as usize)?;
            let tfs = dec.u32s(rec.df as usize)?;
            let positions = if manifest.store_positions {
                dec.u32s(rec.cf as usize)?
            } else {
                Vec::new()
            };
            if docs.iter().any(|&d| d as usize >= n) || docs.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::corrupt(POSTINGS, format!("bad doc ordinals for `{}`", rec.term)));
            }
            postings.push(PostingList { docs, tfs, positions });
        }
        dec.finish()?;

        let forward = if manifest.store_docvectors {
            let data = read_file(&dir, DOCVECTORS, &manifest.files)?;
            Some(decode_forward(
                &data,
                &stats.doc_lengths,
                manifest.store_positions,
                terms.len(),
            )?)
        } else {
            None
        };

        let documents = if manifest.store_raw {
            let data = read_file(&dir, DOCUMENTS, &manifest.files)?;
            let mut dec = Decoder::new(DOCUMENTS, &data);
            let mut docs = Vec::with_capacity(n);
            for _ in 0..n {
                let contents = dec.str()?;
                let raw = match dec.u8()? {
                    0 => None,
                    1 => Some(dec.str()?),
                    flag => return Err(Error::corrupt(DOCUMENTS, format!("bad raw flag {flag}"))),
                };
                docs.push(StoredDocument { contents, raw });
            }
            dec.finish()?;
            Some(docs)
        } else {
            None
        };

        Ok(SparseIndex {
            dir,
            manifest,
            stats,
            docids,
            doc_lookup,
            terms,
            term_lookup,
            postings,
            forward,
            documents,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &IndexManifest {
        &self.manifest
    }

    pub fn analyzer(&self) -> &AnalyzerConfig {
        &self.manifest.analyzer
    }

    pub fn stats(&self) -> &CollectionStats {
        &self.stats
    }

    pub fn doc_count(&self) -> u32 {
        self.stats.doc_count
    }

    pub fn docid(&self, ordinal: u32) -> &str {
        &self.docids[ordinal as usize]
    }

    pub fn docids(&self) -> &[String] {
        &self.docids
    }

    pub fn doc_ordinal(&self, docid: &str) -> Option<u32> {
        self.doc_lookup.get(docid).copied()
    }

    pub fn doc_length(&self, ordinal: u32) -> u32 {
        self.stats.doc_lengths[ordinal as usize]
    }

    /// Dictionary in lexicographic term order.
    pub fn terms(&self) -> &[TermRecord] {
        &self.terms
    }

    pub fn term_id(&self, term: &str) -> Option<u32> {
        self.term_lookup.get(term).copied()
    }

    pub fn term(&self, id: u32) -> &TermRecord {
        &self.terms[id as usize]
    }

    pub fn postings(&self, term_id: u32) -> &PostingList {
        &self.postings[term_id as usize]
    }

    pub fn has_positions(&self) -> bool {
        self.manifest.store_positions
    }

    pub fn forward(&self) -> Result<&ForwardIndex> {
        self.forward.as_ref().ok_or(Error::DocvectorsNotStored)
    }

    pub fn stored_document(&self, ordinal: u32) -> Result<&StoredDocument> {
        self.documents
            .as_ref()
            .map(|docs| &docs[ordinal as usize])
            .ok_or(Error::RawNotStored)
    }
}

fn decode_forward(data: &[u8], lengths: &[u32], has_positions: bool, num_terms: usize) -> Result<ForwardIndex> {
    let mut dec = Decoder::new(DOCVECTORS, data);
    let mut fwd = ForwardIndex {
        has_positions,
        entry_offsets: vec![0],
        position_offsets: vec![0],
        ..ForwardIndex::default()
    };
    for &dl in lengths {
        let n = dec.u32()? as usize;
        let ids = dec.u32s(n)?;
        let tfs = dec.u32s(n)?;
        if ids.iter().any(|&t| t as usize >= num_terms) || ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::corrupt(DOCVECTORS, "bad term ids"));
        }
        let total: u64 = tfs.iter().map(|&t| u64::from(t)).sum();
        if total != u64::from(dl) {
            return Err(Error::corrupt(DOCVECTORS, "term counts disagree with document length"));
        }
        fwd.term_ids.extend(ids);
        fwd.tfs.extend(tfs);
        if has_positions {
            fwd.positions.extend(dec.u32s(dl as usize)?);
        }
        fwd.entry_offsets.push(fwd.term_ids.len());
        fwd.position_offsets.push(fwd.positions.len());
    }
    dec.finish()?;
    Ok(fwd)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Vec<Result<JsonDocument>> {
        vec![
            Ok(JsonDocument::new("d1", "a cat")),
            Ok(JsonDocument::new("d2", "cat cat dog")),
            Ok(JsonDocument::new("d3", "dog")),
        ]
    }

    fn plain_opts() -> IndexBuildOptions {
        IndexBuildOptions::full(AnalyzerConfig::plain())
    }

    #[test]
    fn toy_dictionary_counts() {
        let dir = tempfile::tempdir().unwrap();
        let index = build_index(toy(), &plain_opts(), dir.path()).unwrap();
        let dict: Vec<_> = index.terms().iter().map(|t| (t.term.as_str(), t.df, t.cf)).collect();
        assert_eq!(dict, [("a", 1, 1), ("cat", 2, 3), ("dog", 2, 2)]);
        assert_eq!(index.stats().doc_count, 3);
        assert_eq!(index.stats().avg_doc_length, 2.0);
        assert_eq!(index.stats().doc_lengths, [2, 3, 1]);
    }

    #[test]
    fn default_analyzer_drops_stopword() {
        let dir = tempfile::tempdir().unwrap();
        let opts = IndexBuildOptions::default();
        let index = build_index(toy(), &opts, dir.path()).unwrap();
        assert!(index.term_id("a").is_none());
        assert!(index.term_id("cat").is_some());
    }

    #[test]
    fn duplicate_id_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut docs = toy();
        docs.push(Ok(JsonDocument::new("d2", "again")));
        let err = build_index(docs, &plain_opts(), dir.path()).unwrap_err();
        assert!(matches!(err, Error::DuplicateDocId(ref id) if id == "d2"));
    }

    #[test]
    fn empty_collection_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let err = build_index(Vec::new(), &plain_opts(), dir.path()).unwrap_err();
        assert!(matches!(err, Error::EmptyCollection));
    }

    #[test]
    fn unwritable_output_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = build_index(toy(), &plain_opts(), blocker.join("sub")).unwrap_err();
        assert!(err.is_io(), "{err}");
    }

    #[test]
    fn missing_dictionary_file_fails_load() {
        let dir = tempfile::tempdir().unwrap();
        build_index(toy(), &plain_opts(), dir.path()).unwrap();
        std::fs::remove_file(dir.path().join(TERMS)).unwrap();
        let err = load_index(dir.path()).unwrap_err();
        assert!(err.to_string().contains(TERMS), "{err}");
    }

    #[test]
    fn corrupted_segment_fails_checksum() {
        let dir = tempfile::tempdir().unwrap();
        build_index(toy(), &plain_opts(), dir.path()).unwrap();
        let path = dir.path().join(POSTINGS);
        let mut data = std::fs::read(&path).unwrap();
        data[0] ^= 0xff;
        std::fs::write(&path, data).unwrap();
        let err = load_index(dir.path()).unwrap_err();
        assert!(
            matches!(err, Error::Corrupt { ref file, .. } if file == POSTINGS),
            "{err}"
        );
    }

    #[test]
    fn version_mismatch_is_explicit() {
        let dir = tempfile::tempdir().unwrap();
        build_index(toy(), &plain_opts(), dir.path()).unwrap();
        let path = dir.path().join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("\"version\": 1", "\"version\": 9")).unwrap();
        let err = load_index(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Version { found: 9, expected: 1 }), "{err}");
    }

    #[test]
    fn docvectors_absent_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let opts = IndexBuildOptions {
            store_docvectors: false,
            ..plain_opts()
        };
        let index = build_index(toy(), &opts, dir.path()).unwrap();
        assert!(matches!(index.forward(), Err(Error::DocvectorsNotStored)));
    }

    #[test]
    fn postings_without_positions() {
        let dir = tempfile::tempdir().unwrap();
        let opts = IndexBuildOptions {
            store_positions: false,
            ..plain_opts()
        };
        let index = build_index(toy(), &opts, dir.path()).unwrap();
        let cat = index.term_id("cat").unwrap();
        let got: Vec<_> = index.postings(cat).iter().map(|p| (p.doc, p.tf, p.positions)).collect();
        assert_eq!(got, [(0, 1, None), (1, 2, None)]);
        let fwd: Vec<_> = index.forward().unwrap().doc(1).collect();
        assert_eq!(fwd, [(1, 2, None), (2, 1, None)]);
    }
}
