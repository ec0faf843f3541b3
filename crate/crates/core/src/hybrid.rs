//! Sparse–dense fusion by weighted score interpolation.
//!
//! `fused(d) = dense(d) + alpha · sparse(d)` over the union of both
//! candidate lists. A document missing from one list takes that list's
//! minimum returned score; an empty list contributes 0 everywhere.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::eval::Run;
use crate::ranking::{RankedList, ScoredDoc};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridParams {
    /// Weight on the sparse score.
    pub alpha: f64,
    /// Final depth.
    pub k: usize,
    /// Per-system depth; inputs are cut to this many hits before fusion.
    pub k_candidates: usize,
}

impl HybridParams {
    pub fn new(alpha: f64, k: usize, k_candidates: usize) -> Result<Self> {
        let p = HybridParams { alpha, k, k_candidates };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be finite and ≥ 0, got {}",
                self.alpha
            )));
        }
        if self.k > self.k_candidates {
            return Err(Error::InvalidArgument(format!(
                "k ({}) must not exceed k_candidates ({})",
                self.k, self.k_candidates
            )));
        }
        Ok(())
    }
}

/// Fuses two lists for the same query.
pub fn fuse(dense: &RankedList, sparse: &RankedList, p: &HybridParams) -> Result<RankedList> {
    p.validate()?;
    if dense.qid != sparse.qid {
        return Err(Error::QidMismatch(dense.qid.clone(), sparse.qid.clone()));
    }
    let qid = dense.qid.clone();
    let dense = &dense.hits[..dense.len().min(p.k_candidates)];
    let sparse = &sparse.hits[..sparse.len().min(p.k_candidates)];
    let dense_min = min_score(dense);
    let sparse_min = min_score(sparse);

    let mut scores: BTreeMap<&str, (Option<f64>, Option<f64>)> = BTreeMap::new();
    for h in dense {
        scores.entry(&h.docid).or_default().0 = Some(h.score);
    }
    for h in sparse {
        scores.entry(&h.docid).or_default().1 = Some(h.score);
    }
    let fused = scores
        .into_iter()
        .map(|(docid, (d, s))| {
            let score = d.unwrap_or(dense_min) + p.alpha * s.unwrap_or(sparse_min);
            (docid.to_owned(), score)
        })
        .collect();
    Ok(RankedList::from_scores(qid, fused, p.k))
}

fn min_score(hits: &[ScoredDoc]) -> f64 {
    hits.iter().map(|h| h.score).reduce(f64::min).unwrap_or(0.0)
}

/// Fuses every qid present in either run. A qid missing from one run is
/// fused against an empty list.
pub fn hybrid_batch(dense_run: &Run, sparse_run: &Run, p: &HybridParams) -> Result<Run> {
    p.validate()?;
    let mut qids: Vec<&str> = dense_run.lists.keys().map(String::as_str).collect();
    qids.extend(sparse_run.lists.keys().map(String::as_str));
    qids.sort_unstable();
    qids.dedup();
    let mut out = Run::new(dense_run.tag.clone());
    for qid in qids {
        let empty = RankedList::empty(qid);
        let dense = dense_run.get(qid).unwrap_or(&empty);
        let sparse = sparse_run.get(qid).unwrap_or(&empty);
        out.insert(fuse(dense, sparse, p)?);
    }
    Ok(out)
}
