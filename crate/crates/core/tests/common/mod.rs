//! Reference implementations and generators shared by the integration tests.
//!
//! The oracles here deliberately avoid the crate's own scoring, heap and
//! metric code: they recompute everything from raw data by brute force.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use ferret::eval::{Qrels, Run};
use ferret::index::SparseIndex;
use ferret::{JsonDocument, RankedList, VectorStore};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn pairs(list: &RankedList) -> Vec<(String, f64)> {
    list.hits.iter().map(|h| (h.docid.clone(), h.score)).collect()
}

/// Sorts by score descending, then docid ascending, and keeps `k`.
pub fn full_sort(mut scored: Vec<(String, f64)>, k: usize) -> Vec<(String, f64)> {
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

// ---------------------------------------------------------------- sparse

/// A random corpus: lowercase pseudo-words drawn from a skewed distribution
/// over `vocab` words, plus occasional stopwords and capitalisation.
pub fn random_corpus(rng: &mut ChaCha8Rng, docs: usize, vocab: usize) -> (Vec<JsonDocument>, Vec<String>) {
    let words = random_vocab(rng, vocab);
    let mut ids: Vec<usize> = (0..docs).collect();
    ids.shuffle(rng);
    let corpus = ids
        .iter()
        .map(|&n| {
            let len = rng.random_range(0..30);
            let text: Vec<String> = (0..len).map(|_| random_word(rng, &words)).collect();
            JsonDocument::new(format!("d{n:04}"), text.join(" "))
        })
        .collect();
    (corpus, words)
}

pub fn random_vocab(rng: &mut ChaCha8Rng, size: usize) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    while out.len() < size {
        let len = rng.random_range(2..9);
        let w: String = (0..len).map(|_| rng.random_range(b'a'..=b'z') as char).collect();
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

pub fn random_word(rng: &mut ChaCha8Rng, words: &[String]) -> String {
    match rng.random_range(0..20) {
        0 => "the".into(),
        1 => words[rng.random_range(0..words.len())].to_uppercase(),
        _ => {
            let u: f64 = rng.random();
            words[((u * u) * words.len() as f64) as usize].clone()
        }
    }
}

pub fn random_query(rng: &mut ChaCha8Rng, words: &[String]) -> String {
    let n = rng.random_range(1..6);
    (0..n)
        .map(|_| {
            if rng.random_range(0..10) == 0 {
                "zzzunseen".to_owned()
            } else {
                random_word(rng, words)
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Scores every document from the forward index alone: df, document
/// lengths and the average length are all recounted here.
pub fn brute_force_bm25(index: &SparseIndex, query: &str, k: usize, k1: f64, b: f64) -> Vec<(String, f64)> {
    let forward = index.forward().expect("forward index stored");
    let n = index.docids().len();
    let mut df: HashMap<String, u32> = HashMap::new();
    let mut vectors: Vec<BTreeMap<String, u32>> = Vec::with_capacity(n);
    for ord in 0..n as u32 {
        let v: BTreeMap<String, u32> = forward
            .doc(ord)
            .map(|(tid, tf, _)| (index.term(tid).term.clone(), tf))
            .collect();
        for t in v.keys() {
            *df.entry(t.clone()).or_default() += 1;
        }
        vectors.push(v);
    }
    let lengths: Vec<f64> = vectors.iter().map(|v| v.values().sum::<u32>() as f64).collect();
    let avgdl = lengths.iter().sum::<f64>() / n as f64;

    let mut qtf: BTreeMap<String, u32> = BTreeMap::new();
    for tok in index.analyzer().analyze(query) {
        *qtf.entry(tok.term).or_default() += 1;
    }
    let mut scored = Vec::new();
    for (ord, v) in vectors.iter().enumerate() {
        let mut score = 0.0;
        let mut hit = false;
        for (term, &count) in &qtf {
            let Some(&tf) = v.get(term) else { continue };
            hit = true;
            let d = df[term] as f64;
            let idf = (1.0 + (n as f64 - d + 0.5) / (d + 0.5)).ln();
            let tf = tf as f64;
            let norm = tf + k1 * (1.0 - b + b * lengths[ord] / avgdl);
            score += count as f64 * idf * tf * (k1 + 1.0) / norm;
        }
        if hit {
            scored.push((index.docids()[ord].clone(), score));
        }
    }
    full_sort(scored, k)
}

// ----------------------------------------------------------------- dense

/// Random vectors; with `coarse` the values sit on a small grid so exact
/// score ties are common.
pub fn random_store(rng: &mut ChaCha8Rng, n: usize, dim: usize, coarse: bool) -> VectorStore {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(rng);
    let rows = ids.into_iter().map(|i| {
        let v = (0..dim)
            .map(|_| {
                if coarse {
                    rng.random_range(-2i32..=2) as f32 * 0.5
                } else {
                    rng.random_range(-1.0f32..1.0)
                }
            })
            .collect();
        (format!("v{i:05}"), v)
    });
    VectorStore::from_rows(dim, rows).unwrap()
}

pub fn uniform_store(rng: &mut ChaCha8Rng, n: usize, dim: usize, prefix: &str) -> VectorStore {
    let rows = (0..n).map(|i| (format!("{prefix}{i}"), (0..dim).map(|_| rng.random::<f32>()).collect()));
    VectorStore::from_rows(dim, rows).unwrap()
}

/// Scores every stored vector and sorts; no heap involved.
pub fn full_sort_dense(store: &VectorStore, query: &[f32], k: usize, cosine: bool) -> Vec<(String, f64)> {
    let norm = |v: &[f32]| v.iter().map(|x| x * x).sum::<f32>().sqrt();
    let qn = norm(query);
    let scored = (0..store.len())
        .map(|i| {
            let v = store.vector(i);
            let mut dot = 0.0f32;
            for j in 0..v.len() {
                dot += query[j] * v[j];
            }
            let s = if cosine {
                let d = qn * norm(v);
                if d == 0.0 {
                    0.0
                } else {
                    dot / d
                }
            } else {
                dot
            };
            (store.id(i).to_owned(), f64::from(s))
        })
        .collect();
    full_sort(scored, k)
}

// ---------------------------------------------------------------- hybrid

/// Fusion computed by linear scans over plain vectors.
pub fn naive_fuse(dense: &[(String, f64)], sparse: &[(String, f64)], alpha: f64, k: usize) -> Vec<(String, f64)> {
    let min = |l: &[(String, f64)]| {
        let mut m: Option<f64> = None;
        for (_, s) in l {
            if m.is_none() || *s < m.unwrap() {
                m = Some(*s);
            }
        }
        m.unwrap_or(0.0)
    };
    let (dmin, smin) = (min(dense), min(sparse));
    let mut union: Vec<String> = Vec::new();
    for (d, _) in dense.iter().chain(sparse) {
        if !union.contains(d) {
            union.push(d.clone());
        }
    }
    let lookup = |l: &[(String, f64)], d: &str, fallback: f64| {
        l.iter().find(|(x, _)| x == d).map(|(_, s)| *s).unwrap_or(fallback)
    };
    let scored = union
        .into_iter()
        .map(|d| {
            let s = lookup(dense, &d, dmin) + alpha * lookup(sparse, &d, smin);
            (d, s)
        })
        .collect();
    full_sort(scored, k)
}

pub fn random_list(rng: &mut ChaCha8Rng, qid: &str, pool: usize, max_len: usize, spread: f64) -> RankedList {
    let len = rng.random_range(0..=max_len.min(pool));
    let mut docs: Vec<usize> = (0..pool).collect();
    docs.shuffle(rng);
    let scored = docs[..len]
        .iter()
        .map(|d| {
            // Quarter steps give exact ties some of the time.
            let s = (rng.random_range(0.0..spread) * 4.0).round() / 4.0;
            (format!("p{d:03}"), s)
        })
        .collect();
    RankedList::from_scores(qid, scored, usize::MAX)
}

// ------------------------------------------------------------------ eval

/// A run with distinct scores, so any evaluator orders it the same way.
pub fn random_eval_pair(rng: &mut ChaCha8Rng) -> (Run, Qrels) {
    let mut run = Run::new("rand");
    let mut qrels = Qrels::new();
    let queries = rng.random_range(1..15);
    for q in 0..queries {
        let qid = format!("q{q}");
        let pool = rng.random_range(5..60);
        if rng.random_range(0..8) != 0 {
            let len = rng.random_range(0..pool);
            let mut docs: Vec<usize> = (0..pool).collect();
            docs.shuffle(rng);
            let scored = docs[..len]
                .iter()
                .enumerate()
                .map(|(i, d)| (format!("d{d}"), 100.0 - i as f64 * 0.5))
                .collect();
            run.insert(RankedList::from_scores(&qid, scored, usize::MAX));
        }
        if rng.random_range(0..8) != 0 {
            for d in 0..pool {
                if rng.random_range(0..4) == 0 {
                    qrels.insert(qid.clone(), format!("d{d}"), rng.random_range(0..=3));
                }
            }
        }
    }
    (run, qrels)
}

/// A trec_eval-style evaluator over the run's text form: re-sorts each
/// query by score (descending) and computes MRR@k, Recall@k and AP over
/// judged queries. Returns `(mrr, recall, map)`.
pub fn reference_eval(trec_text: &str, qrels_text: &str, k_mrr: usize, k_recall: usize) -> (f64, f64, f64) {
    let mut judged: BTreeMap<String, HashMap<String, i32>> = BTreeMap::new();
    for line in qrels_text.lines() {
        let f: Vec<&str> = line.split_whitespace().collect();
        judged
            .entry(f[0].into())
            .or_default()
            .insert(f[2].into(), f[3].parse().unwrap());
    }
    let mut ranked: HashMap<String, Vec<(f64, String)>> = HashMap::new();
    for line in trec_text.lines() {
        let f: Vec<&str> = line.split_whitespace().collect();
        ranked
            .entry(f[0].into())
            .or_default()
            .push((f[4].parse().unwrap(), f[2].into()));
    }
    for docs in ranked.values_mut() {
        // trec_eval breaks ties by docid descending; the generated runs have none.
        docs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(b.1.cmp(&a.1)));
    }
    let (mut rr, mut rec, mut ap) = (0.0, 0.0, 0.0);
    let nq = judged.len() as f64;
    let empty = Vec::new();
    for (qid, grades) in &judged {
        let rel: HashSet<&String> = grades.iter().filter(|(_, g)| **g >= 1).map(|(d, _)| d).collect();
        let docs = ranked.get(qid).unwrap_or(&empty);
        if let Some(pos) = docs.iter().take(k_mrr).position(|(_, d)| rel.contains(d)) {
            rr += 1.0 / (pos + 1) as f64;
        }
        if !rel.is_empty() {
            let found = docs.iter().take(k_recall).filter(|(_, d)| rel.contains(d)).count();
            rec += found as f64 / rel.len() as f64;
            let mut hits = 0.0;
            let mut sum = 0.0;
            for (i, (_, d)) in docs.iter().enumerate() {
                if rel.contains(d) {
                    hits += 1.0;
                    sum += hits / (i + 1) as f64;
                }
            }
            ap += sum / rel.len() as f64;
        }
    }
    if judged.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    (rr / nq, rec / nq, ap / nq)
}

pub fn qrels_text(qrels: &Qrels) -> String {
    let mut out = String::new();
    for (qid, docs) in qrels.iter() {
        for (d, g) in docs {
            out.push_str(&format!("{qid} 0 {d} {g}\n"));
        }
    }
    out
}

/// Concatenates every file of an index directory, in name order.
pub fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}
