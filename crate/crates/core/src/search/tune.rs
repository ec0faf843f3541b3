//! Grid search over BM25 parameters.

use crate::error::{Error, Result};
use crate::eval::{evaluate, Metric, Qrels, Topics, DEFAULT_REL_THRESHOLD};
use crate::index::SparseIndex;
use crate::search::Bm25Params;

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub params: Bm25Params,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best: GridPoint,
    /// Every evaluated point, ordered by k1 then b.
    pub table: Vec<GridPoint>,
}

#[derive(Debug, Clone)]
pub struct TuneOptions {
    pub metric: Metric,
    /// Retrieval depth per query. Defaults to the metric cutoff, or 1000.
    pub hits: Option<usize>,
    pub field: String,
    pub threads: usize,
    pub rel_threshold: i32,
}

impl TuneOptions {
    pub fn new(metric: Metric) -> Self {
        TuneOptions {
            metric,
            hits: None,
            field: "title".into(),
            threads: 1,
            rel_threshold: DEFAULT_REL_THRESHOLD,
        }
    }
}

/// Evaluates every `(k1, b)` combination and returns the best. Ties go to
/// the smaller k1, then the smaller b.
pub fn tune_grid(
    index: &SparseIndex,
    topics: &Topics,
    qrels: &Qrels,
    k1_values: &[f64],
    b_values: &[f64],
    opts: &TuneOptions,
) -> Result<TuneResult> {
    if k1_values.is_empty() || b_values.is_empty() {
        return Err(Error::InvalidArgument("empty parameter grid".into()));
    }
    let mut k1s = k1_values.to_vec();
    let mut bs = b_values.to_vec();
    k1s.sort_by(f64::total_cmp);
    k1s.dedup();
    bs.sort_by(f64::total_cmp);
    bs.dedup();

    let hits = opts.hits.or(opts.metric.depth()).unwrap_or(1000);
    let mut table = Vec::with_capacity(k1s.len() * bs.len());
    let mut best: Option<GridPoint> = None;
    for &k1 in &k1s {
        for &b in &bs {
            let params = Bm25Params::new(k1, b)?;
            let run = index.batch_search(topics, &opts.field, hits, params, opts.threads)?;
            let value = evaluate(&run, qrels, opts.metric, opts.rel_threshold)?.value;
            log::info!("k1={k1} b={b} {}={value:.6}", opts.metric);
            let point = GridPoint { params, value };
            if best.as_ref().map_or(true, |b| point.value > b.value) {
                best = Some(point.clone());
            }
            table.push(point);
        }
    }
    Ok(TuneResult {
        best: best.expect("grid is non-empty"),
        table,
    })
}

/// Parses `start:end:step` (inclusive) or a single value into grid values.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidArgument(format!("bad grid `{spec}` (expected start:end:step)"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match parts.as_slice() {
        [v] => Ok(vec![*v]),
        [start, end, step] => {
            if !(start.is_finite() && end.is_finite()) || step.is_nan() || *step <= 0.0 || end < start {
                return Err(bad());
            }
            let n = ((end - start) / step + 1e-9).floor() as usize;
            // Rounded so that 0.1 + 2·0.1 prints as 0.3.
            Ok((0..=n)
                .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
                .collect())
        }
        _ => Err(bad()),
    }
}
