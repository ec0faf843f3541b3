//! MRR@k, Recall@k and average precision.
//!
//! Means are taken over every query in the qrels. A qrels query missing from
//! the run scores 0. Run queries without judgments are skipped and counted.
//! A document is relevant when its grade is at least the threshold.

use std::fmt;

use crate::error::{Error, Result};
use crate::eval::{Qrels, Run};
use crate::ranking::RankedList;

pub const DEFAULT_REL_THRESHOLD: i32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Mrr(usize),
    Recall(usize),
    Map,
}

impl Metric {
    pub const SUPPORTED: &'static str = "mrr@K, recall@K, map";

    /// Ranking depth the metric looks at, if it has a cutoff.
    pub fn depth(&self) -> Option<usize> {
        match *self {
            Metric::Mrr(k) | Metric::Recall(k) => Some(k),
            Metric::Map => None,
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Mrr(k) => write!(f, "mrr@{k}"),
            Metric::Recall(k) => write!(f, "recall@{k}"),
            Metric::Map => f.write_str("map"),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::InvalidArgument(format!("unknown metric `{s}` (supported: {})", Metric::SUPPORTED));
        let lower = s.trim().to_ascii_lowercase();
        if lower == "map" {
            return Ok(Metric::Map);
        }
        let (name, k) = lower.split_once('@').ok_or_else(unknown)?;
        let k: usize = k.parse().map_err(|_| unknown())?;
        if k < 1 {
            return Err(Error::InvalidArgument(format!("metric cutoff must be ≥ 1 in `{s}`")));
        }
        match name {
            "mrr" => Ok(Metric::Mrr(k)),
            "recall" => Ok(Metric::Recall(k)),
            _ => Err(unknown()),
        }
    }
}

/// Parses a comma-separated metric list such as `mrr@10,recall@1000,map`.
pub fn parse_metrics(list: &str) -> Result<Vec<Metric>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub metric: Metric,
    pub value: f64,
    pub queries_evaluated: usize,
    pub queries_skipped: usize,
    /// Per-query values in qid order.
    pub per_query: Vec<(String, f64)>,
}

fn check_cutoff(k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::InvalidArgument("metric cutoff k must be ≥ 1".into()));
    }
    Ok(())
}

pub fn mrr(run: &Run, qrels: &Qrels, k: usize, rel_threshold: i32) -> Result<Evaluation> {
    evaluate(run, qrels, Metric::Mrr(k), rel_threshold)
}

pub fn recall(run: &Run, qrels: &Qrels, k: usize, rel_threshold: i32) -> Result<Evaluation> {
    evaluate(run, qrels, Metric::Recall(k), rel_threshold)
}

pub fn average_precision(run: &Run, qrels: &Qrels, rel_threshold: i32) -> Result<Evaluation> {
    evaluate(run, qrels, Metric::Map, rel_threshold)
}

pub fn evaluate(run: &Run, qrels: &Qrels, metric: Metric, rel_threshold: i32) -> Result<Evaluation> {
    if let Some(k) = metric.depth() {
        check_cutoff(k)?;
    }
    let mut per_query = Vec::with_capacity(qrels.len());
    for qid in qrels.qids() {
        let value = match run.get(qid) {
            Some(list) => query_value(list, qrels, metric, rel_threshold),
            None => 0.0,
        };
        per_query.push((qid.to_owned(), value));
    }
    let skipped = run.lists.keys().filter(|q| !qrels.contains_query(q)).count();
    let value = if per_query.is_empty() {
        0.0
    } else {
        per_query.iter().map(|(_, v)| v).sum::<f64>() / per_query.len() as f64
    };
    Ok(Evaluation {
        metric,
        value,
        queries_evaluated: per_query.len(),
        queries_skipped: skipped,
        per_query,
    })
}

fn query_value(list: &RankedList, qrels: &Qrels, metric: Metric, threshold: i32) -> f64 {
    let qid = list.qid.as_str();
    let is_rel = |docid: &str| qrels.grade(qid, docid).is_some_and(|g| g >= threshold);
    match metric {
        Metric::Mrr(k) => list
            .hits
            .iter()
            .take(k)
            .position(|h| is_rel(&h.docid))
            .map_or(0.0, |i| 1.0 / (i + 1) as f64),
        Metric::Recall(k) => {
            let total = qrels.num_relevant(qid, threshold);
            if total == 0 {
                return 0.0;
            }
            let found = list.hits.iter().take(k).filter(|h| is_rel(&h.docid)).count();
            found as f64 / total as f64
        }
        Metric::Map => {
            let total = qrels.num_relevant(qid, threshold);
            if total == 0 {
                return 0.0;
            }
            let mut found = 0usize;
            let mut sum = 0.0;
            for (i, hit) in list.hits.iter().enumerate() {
                if is_rel(&hit.docid) {
                    found += 1;
                    sum += found as f64 / (i + 1) as f64;
                }
            }
            sum / total as f64
        }
    }
}
