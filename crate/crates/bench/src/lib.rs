//! Synthetic workloads shared by the benchmarks.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ferret::{JsonDocument, VectorStore};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Vocabulary of pronounceable lowercase words.
pub fn vocabulary(rng: &mut impl Rng, size: usize) -> Vec<String> {
    const SYLLABLES: [&str; 16] = [
        "ka", "lo", "mi", "ter", "ing", "ses", "ra", "ven", "tion", "al", "pu", "or", "den", "is", "ly", "ment",
    ];
    let mut words: Vec<String> = (0..size)
        .map(|_| {
            let n = rng.random_range(1..=4);
            (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
        })
        .collect();
    words.sort();
    words.dedup();
    words
}

/// Documents with Zipf-like term frequencies over `vocab`.
pub fn corpus(rng: &mut impl Rng, docs: usize, vocab: &[String], mean_len: usize) -> Vec<JsonDocument> {
    (0..docs)
        .map(|i| {
            let len = rng.random_range(mean_len / 2..=mean_len * 3 / 2);
            let text: Vec<&str> = (0..len).map(|_| zipf_word(rng, vocab)).collect();
            JsonDocument::new(format!("doc{i:06}"), text.join(" "))
        })
        .collect()
}

pub fn query(rng: &mut impl Rng, vocab: &[String], terms: usize) -> String {
    (0..terms).map(|_| zipf_word(rng, vocab)).collect::<Vec<_>>().join(" ")
}

fn zipf_word<'a>(rng: &mut impl Rng, vocab: &'a [String]) -> &'a str {
    let u: f64 = rng.random();
    let i = ((vocab.len() as f64).powf(u) - 1.0) as usize;
    &vocab[i.min(vocab.len() - 1)]
}

pub fn vectors(rng: &mut impl Rng, n: usize, dim: usize, prefix: &str) -> VectorStore {
    let ids = (0..n).map(|i| format!("{prefix}{i}")).collect();
    let data = (0..n * dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    VectorStore::new(dim, ids, data).expect("valid store")
}
