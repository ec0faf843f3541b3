//! Ranked result lists and bounded top-k selection.
//!
//! Every ranking in the crate uses the same total order: score descending,
//! then external docid ascending. Ranks are 1-based and contiguous.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub docid: String,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankedList {
    pub qid: String,
    pub hits: Vec<ScoredDoc>,
}

/// The canonical result order: higher score first, ties by docid ascending.
/// `0.0` and `-0.0` are equal scores.
pub fn result_order(a_score: f64, a_docid: &str, b_score: f64, b_docid: &str) -> Ordering {
    b_score
        .partial_cmp(&a_score)
        .unwrap_or_else(|| b_score.total_cmp(&a_score))
        .then_with(|| a_docid.cmp(b_docid))
}

impl RankedList {
    pub fn empty(qid: impl Into<String>) -> Self {
        RankedList {
            qid: qid.into(),
            hits: Vec::new(),
        }
    }

    /// Sorts `(docid, score)` pairs into canonical order, keeps the best `k`
    /// and assigns ranks. Docids are assumed unique.
    pub fn from_scores(qid: impl Into<String>, mut scored: Vec<(String, f64)>, k: usize) -> Self {
        scored.sort_by(|a, b| result_order(a.1, &a.0, b.1, &b.0));
        scored.truncate(k);
        RankedList {
            qid: qid.into(),
            hits: scored
                .into_iter()
                .enumerate()
                .map(|(i, (docid, score))| ScoredDoc {
                    docid,
                    score,
                    rank: i + 1,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }

    pub fn docids(&self) -> impl Iterator<Item = &str> {
        self.hits.iter().map(|h| h.docid.as_str())
    }

    /// Checks ranks, ordering and docid uniqueness.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = std::collections::HashSet::new();
        for (i, hit) in self.hits.iter().enumerate() {
            if hit.rank != i + 1 {
                return Err(format!("{}: hit {} has rank {}", self.qid, i + 1, hit.rank));
            }
            if !seen.insert(hit.docid.as_str()) {
                return Err(format!("{}: duplicate docid {}", self.qid, hit.docid));
            }
            if i > 0 {
                let prev = &self.hits[i - 1];
                if result_order(prev.score, &prev.docid, hit.score, &hit.docid) != Ordering::Less {
                    return Err(format!(
                        "{}: {} ({}) ranked above {} ({})",
                        self.qid, prev.docid, prev.score, hit.docid, hit.score
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry<'a> {
    score: f64,
    docid: &'a str,
}

impl PartialEq for Entry<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry<'_> {}

impl PartialOrd for Entry<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry<'_> {
    // Greater means better ranked.
    fn cmp(&self, other: &Self) -> Ordering {
        result_order(other.score, other.docid, self.score, self.docid)
    }
}

/// Bounded heap keeping the best `k` entries under the canonical order.
///
/// The docid tie-break lives inside the comparator, so the result does not
/// depend on the order in which candidates are offered.
pub struct TopK<'a> {
    k: usize,
    heap: BinaryHeap<Reverse<Entry<'a>>>,
}

impl<'a> TopK<'a> {
    pub fn new(k: usize) -> Self {
        TopK {
            k,
            heap: BinaryHeap::with_capacity(k.min(4096) + 1),
        }
    }

    pub fn push(&mut self, docid: &'a str, score: f64) {
        if self.k == 0 {
            return;
        }
        let entry = Entry { score, docid };
        if self.heap.len() < self.k {
            self.heap.push(Reverse(entry));
        } else if let Some(Reverse(worst)) = self.heap.peek() {
            if entry > *worst {
                self.heap.pop();
                self.heap.push(Reverse(entry));
            }
        }
    }

    /// Lowest score currently retained, once the heap is full.
    pub fn threshold(&self) -> Option<f64> {
        if self.heap.len() < self.k {
            None
        } else {
            self.heap.peek().map(|Reverse(e)| e.score)
        }
    }

    pub fn into_ranked_list(self, qid: impl Into<String>) -> RankedList {
        let mut entries: Vec<Entry> = self.heap.into_iter().map(|Reverse(e)| e).collect();
        entries.sort_by(|a, b| b.cmp(a));
        RankedList {
            qid: qid.into(),
            hits: entries
                .into_iter()
                .enumerate()
                .map(|(i, e)| ScoredDoc {
                    docid: e.docid.to_owned(),
                    score: e.score,
                    rank: i + 1,
                })
                .collect(),
        }
    }
}
