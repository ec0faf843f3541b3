//! Config-driven regression runs: build an index, produce runs, evaluate
//! them and compare against expected values.
//!
//! A spec is strict YAML; unknown keys are errors. Paths in the spec are
//! relative to the spec file. All artifacts go under an output directory:
//!
//! ```yaml
//! name: mini
//! corpus: corpus
//! index: { store_positions: true }
//! runs:
//!   - name: bm25
//!     model: bm25
//!     topics: topics.tsv
//!     params: { k1: 0.9, b: 0.4, hits: 10 }
//!     output: runs/bm25.trec
//! checks:
//!   - run: bm25
//!     qrels: qrels.txt
//!     metric: mrr@10
//!     expected: 0.5
//!     tolerance: 0.000001
//! ```
//!
//! The markdown report contains no timestamps or absolute paths, so a re-run
//! over the same inputs reproduces it byte for byte.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::analysis::{resolve_stopwords, AnalyzerConfig, StemmerKind};
use crate::collection::ingest;
use crate::dense::{load_vectors, DenseIndex, HnswParams, Similarity};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate, format_score, load_qrels, load_topics_auto, write_run, Metric, Qrels, Run, RunFormat,
    DEFAULT_REL_THRESHOLD,
};
use crate::hybrid::{hybrid_batch, HybridParams};
use crate::index::{build_index, IndexBuildOptions, SparseIndex};
use crate::search::Bm25Params;

pub const REPORT_FILE: &str = "report.md";
const INDEX_DIR: &str = "index";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionSpec {
    pub name: String,
    pub corpus: PathBuf,
    #[serde(default)]
    pub index: IndexSpec,
    pub runs: Vec<RunSpec>,
    pub checks: Vec<CheckSpec>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndexSpec {
    pub store_positions: bool,
    pub store_docvectors: bool,
    pub store_raw: bool,
    pub stemmer: StemmerKind,
    /// `default`, `none`, or a path relative to the spec.
    pub stopwords: String,
    pub threads: usize,
}

impl Default for IndexSpec {
    fn default() -> Self {
        IndexSpec {
            store_positions: false,
            store_docvectors: false,
            store_raw: false,
            stemmer: StemmerKind::Porter,
            stopwords: "default".into(),
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Bm25,
    DenseFlat,
    DenseHnsw,
    Hybrid,
}

impl Model {
    fn name(self) -> &'static str {
        match self {
            Model::Bm25 => "bm25",
            Model::DenseFlat => "dense-flat",
            Model::DenseHnsw => "dense-hnsw",
            Model::Hybrid => "hybrid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub name: String,
    pub model: Model,
    /// Query texts for bm25, query vectors for dense models. Unused by hybrid.
    #[serde(default)]
    pub topics: Option<PathBuf>,
    #[serde(default)]
    pub params: serde_yaml::Value,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub run: String,
    pub qrels: PathBuf,
    pub metric: String,
    pub expected: f64,
    pub tolerance: f64,
    #[serde(default = "default_threshold")]
    pub rel_threshold: i32,
}

fn default_threshold() -> i32 {
    DEFAULT_REL_THRESHOLD
}

impl CheckSpec {
    /// The name used in reports: `run metric`.
    pub fn name(&self) -> String {
        format!("{} {}", self.run, self.metric)
    }
}

fn default_hits() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct Bm25RunParams {
    #[serde(default = "default_k1")]
    k1: f64,
    #[serde(default = "default_b")]
    b: f64,
    #[serde(default = "default_hits")]
    hits: usize,
    #[serde(default = "default_field")]
    field: String,
}

fn default_k1() -> f64 {
    Bm25Params::default().k1
}

fn default_b() -> f64 {
    Bm25Params::default().b
}

fn default_field() -> String {
    "title".into()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatRunParams {
    vectors: PathBuf,
    #[serde(default)]
    similarity: Similarity,
    #[serde(default = "default_hits")]
    hits: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct HnswRunParams {
    vectors: PathBuf,
    #[serde(default)]
    similarity: Similarity,
    #[serde(default = "default_hits")]
    hits: usize,
    #[serde(rename = "M", default = "default_m")]
    m: usize,
    #[serde(default = "default_ef_construction")]
    ef_construction: usize,
    #[serde(default = "default_ef_search")]
    ef_search: usize,
    #[serde(default = "default_seed")]
    seed: u64,
}

fn default_m() -> usize {
    HnswParams::default().m
}

fn default_ef_construction() -> usize {
    HnswParams::default().ef_construction
}

fn default_ef_search() -> usize {
    HnswParams::default().ef_search
}

fn default_seed() -> u64 {
    HnswParams::default().seed
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct HybridRunParams {
    dense: String,
    sparse: String,
    alpha: f64,
    #[serde(default = "default_hits")]
    hits: usize,
    #[serde(default)]
    k_candidates: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
enum RunParams {
    Bm25(Bm25RunParams),
    Flat(FlatRunParams),
    Hnsw(HnswRunParams),
    Hybrid(HybridRunParams),
}

impl RunParams {
    fn describe(&self) -> String {
        match self {
            RunParams::Bm25(p) => format!("k1={} b={} hits={} field={}", p.k1, p.b, p.hits, p.field),
            RunParams::Flat(p) => format!(
                "vectors={} similarity={} hits={}",
                p.vectors.display(),
                similarity_name(p.similarity),
                p.hits
            ),
            RunParams::Hnsw(p) => format!(
                "vectors={} similarity={} hits={} M={} ef_construction={} ef_search={} seed={}",
                p.vectors.display(),
                similarity_name(p.similarity),
                p.hits,
                p.m,
                p.ef_construction,
                p.ef_search,
                p.seed
            ),
            RunParams::Hybrid(p) => format!(
                "dense={} sparse={} alpha={} hits={} k_candidates={}",
                p.dense,
                p.sparse,
                p.alpha,
                p.hits,
                p.k_candidates.unwrap_or(p.hits)
            ),
        }
    }
}

fn similarity_name(s: Similarity) -> &'static str {
    match s {
        Similarity::InnerProduct => "inner_product",
        Similarity::Cosine => "cosine",
    }
}

fn strict_params<T: DeserializeOwned>(run: &str, value: &serde_yaml::Value) -> Result<T> {
    // A missing `params` block means "all defaults".
    let value = match value {
        serde_yaml::Value::Null => serde_yaml::Value::Mapping(Default::default()),
        v => v.clone(),
    };
    serde_yaml::from_value(value).map_err(|e| Error::Spec(format!("run `{run}` params: {e}")))
}

impl RegressionSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: RegressionSpec = serde_yaml::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RegressionSpec::parse(&text)
    }

    /// Checks names, references, tolerances and every run's parameters.
    pub fn validate(&self) -> Result<()> {
        let mut declared = HashSet::new();
        for run in &self.runs {
            let params = self.run_params(run)?;
            if let RunParams::Hybrid(p) = &params {
                for (role, name) in [("dense", &p.dense), ("sparse", &p.sparse)] {
                    if !declared.contains(name.as_str()) {
                        return Err(Error::Spec(format!(
                            "run `{}`: {role} run `{name}` must be declared before it",
                            run.name
                        )));
                    }
                }
                HybridParams::new(p.alpha, p.hits, p.k_candidates.unwrap_or(p.hits))
                    .map_err(|e| Error::Spec(format!("run `{}`: {e}", run.name)))?;
            } else if run.topics.is_none() {
                return Err(Error::Spec(format!("run `{}` needs `topics`", run.name)));
            }
            if !declared.insert(run.name.as_str()) {
                return Err(Error::Spec(format!("duplicate run name `{}`", run.name)));
            }
        }
        for check in &self.checks {
            if !declared.contains(check.run.as_str()) {
                return Err(Error::Spec(format!("check references undeclared run `{}`", check.run)));
            }
            if !(check.tolerance.is_finite() && check.tolerance >= 0.0) {
                return Err(Error::Spec(format!("check `{}`: tolerance must be ≥ 0", check.name())));
            }
            check
                .metric
                .parse::<Metric>()
                .map_err(|e| Error::Spec(format!("check `{}`: {e}", check.name())))?;
        }
        Ok(())
    }

    fn run_params(&self, run: &RunSpec) -> Result<RunParams> {
        let params = match run.model {
            Model::Bm25 => {
                let p: Bm25RunParams = strict_params(&run.name, &run.params)?;
                Bm25Params::new(p.k1, p.b).map_err(|e| Error::Spec(format!("run `{}`: {e}", run.name)))?;
                RunParams::Bm25(p)
            }
            Model::DenseFlat => RunParams::Flat(strict_params(&run.name, &run.params)?),
            Model::DenseHnsw => {
                let p: HnswRunParams = strict_params(&run.name, &run.params)?;
                hnsw_params(&p)
                    .validate()
                    .map_err(|e| Error::Spec(format!("run `{}`: {e}", run.name)))?;
                RunParams::Hnsw(p)
            }
            Model::Hybrid => RunParams::Hybrid(strict_params(&run.name, &run.params)?),
        };
        Ok(params)
    }
}

fn hnsw_params(p: &HnswRunParams) -> HnswParams {
    HnswParams {
        m: p.m,
        ef_construction: p.ef_construction,
        ef_search: p.ef_search,
        seed: p.seed,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// What happened in a regression run. A stage failure stops the pipeline;
/// the report up to that point is still written.
#[derive(Debug)]
pub struct RegressionOutcome {
    pub report: String,
    pub report_path: PathBuf,
    pub checks: Vec<CheckOutcome>,
    pub failure: Option<(String, Error)>,
}

impl RegressionOutcome {
    pub fn passed(&self) -> bool {
        self.failure.is_none() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct RunRow {
    name: String,
    model: Model,
    params: String,
    output: String,
    queries: usize,
}

struct Pipeline<'a> {
    spec: &'a RegressionSpec,
    base: &'a Path,
    out: &'a Path,
    index: Option<SparseIndex>,
    runs: BTreeMap<String, Run>,
    rows: Vec<RunRow>,
    checks: Vec<CheckOutcome>,
}

/// Runs `spec_path` end to end, writing the index, runs and report under
/// `out_dir`. Returns `Err` only if the spec itself cannot be read.
pub fn run_regression(spec_path: impl AsRef<Path>, out_dir: impl AsRef<Path>) -> Result<RegressionOutcome> {
    let spec_path = spec_path.as_ref();
    let spec = RegressionSpec::load(spec_path)?;
    let base = spec_path.parent().unwrap_or(Path::new(""));
    run_spec(&spec, base, out_dir.as_ref())
}

/// Like [`run_regression`] for an already-parsed spec whose relative paths
/// resolve against `base`.
pub fn run_spec(spec: &RegressionSpec, base: &Path, out_dir: &Path) -> Result<RegressionOutcome> {
    spec.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut p = Pipeline {
        spec,
        base,
        out: out_dir,
        index: None,
        runs: BTreeMap::new(),
        rows: Vec::new(),
        checks: Vec::new(),
    };
    let failure = p.execute().err();
    let report = p.report(failure.as_ref());
    let report_path = out_dir.join(REPORT_FILE);
    std::fs::write(&report_path, &report).map_err(|e| Error::io(&report_path, e))?;
    Ok(RegressionOutcome {
        report,
        report_path,
        checks: p.checks,
        failure,
    })
}

impl Pipeline<'_> {
    fn execute(&mut self) -> std::result::Result<(), (String, Error)> {
        let spec = self.spec;
        let stage = |name: String| move |e: Error| (name, e);
        if spec.runs.iter().any(|r| r.model == Model::Bm25) {
            self.build().map_err(stage("build index".into()))?;
        }
        for run in &spec.runs {
            self.run(run).map_err(stage(format!("run {}", run.name)))?;
        }
        let mut qrels_cache: BTreeMap<PathBuf, Qrels> = BTreeMap::new();
        for check in &spec.checks {
            let name = check.name();
            let outcome = (|| {
                let path = self.base.join(&check.qrels);
                if !qrels_cache.contains_key(&path) {
                    qrels_cache.insert(path.clone(), load_qrels(&path)?);
                }
                let metric: Metric = check.metric.parse()?;
                let observed =
                    evaluate(&self.runs[&check.run], &qrels_cache[&path], metric, check.rel_threshold)?.value;
                // Compare at the printed precision so the report and the verdict agree.
                let observed: f64 = format_score(observed).parse().expect("formatted float");
                let passed = (observed - check.expected).abs() <= check.tolerance + 1e-12;
                Ok(CheckOutcome {
                    name: name.clone(),
                    expected: check.expected,
                    observed,
                    tolerance: check.tolerance,
                    passed,
                })
            })()
            .map_err(stage(format!("check {name}")))?;
            if outcome.passed {
                log::info!("check {} passed: {}", outcome.name, outcome.observed);
            } else {
                log::warn!(
                    "check {} failed: observed {} expected {} ± {}",
                    outcome.name,
                    outcome.observed,
                    outcome.expected,
                    outcome.tolerance
                );
            }
            self.checks.push(outcome);
        }
        Ok(())
    }

    fn build(&mut self) -> Result<()> {
        let ix = &self.spec.index;
        let stopwords = match ix.stopwords.as_str() {
            "default" | "none" => resolve_stopwords(&ix.stopwords)?,
            path => resolve_stopwords(&self.base.join(path).to_string_lossy())?,
        };
        let opts = IndexBuildOptions {
            store_positions: ix.store_positions,
            store_docvectors: ix.store_docvectors,
            store_raw: ix.store_raw,
            analyzer: AnalyzerConfig {
                lowercase: true,
                stopwords,
                stem: ix.stemmer,
            },
            threads: ix.threads.max(1),
        };
        let collection = ingest(self.base.join(&self.spec.corpus))?;
        let start = std::time::Instant::now();
        let index = build_index(collection.documents(), &opts, self.out.join(INDEX_DIR))?;
        log::info!("indexed {} documents in {:?}", index.doc_count(), start.elapsed());
        self.index = Some(index);
        Ok(())
    }

    fn run(&mut self, spec: &RunSpec) -> Result<()> {
        let threads = self.spec.index.threads.max(1);
        let params = self.spec.run_params(spec)?;
        let topics_path = spec.topics.as_ref().map(|t| self.base.join(t));
        let run = match &params {
            RunParams::Bm25(p) => {
                let topics = load_topics_auto(topics_path.as_ref().expect("validated"))?;
                let index = self.index.as_ref().expect("index built before bm25 runs");
                index.batch_search(&topics, &p.field, p.hits, Bm25Params::new(p.k1, p.b)?, threads)?
            }
            RunParams::Flat(p) => {
                let store = load_vectors(self.base.join(&p.vectors))?;
                let queries = load_vectors(topics_path.as_ref().expect("validated"))?;
                DenseIndex::flat(store, p.similarity).batch_search(&queries, p.hits, None, threads)?
            }
            RunParams::Hnsw(p) => {
                let store = load_vectors(self.base.join(&p.vectors))?;
                let queries = load_vectors(topics_path.as_ref().expect("validated"))?;
                let start = std::time::Instant::now();
                let index = DenseIndex::hnsw(store, hnsw_params(p), p.similarity)?;
                log::info!("built HNSW graph in {:?}", start.elapsed());
                index.batch_search(&queries, p.hits, Some(p.ef_search), threads)?
            }
            RunParams::Hybrid(p) => {
                let hp = HybridParams::new(p.alpha, p.hits, p.k_candidates.unwrap_or(p.hits))?;
                hybrid_batch(&self.runs[&p.dense], &self.runs[&p.sparse], &hp)?
            }
        };
        write_run(&run, self.out.join(&spec.output), RunFormat::Trec)?;
        self.rows.push(RunRow {
            name: spec.name.clone(),
            model: spec.model,
            params: params.describe(),
            output: spec.output.display().to_string(),
            queries: run.len(),
        });
        self.runs.insert(spec.name.clone(), run);
        Ok(())
    }

    fn report(&self, failure: Option<&(String, Error)>) -> String {
        let spec = self.spec;
        let mut r = String::new();
        let _ = writeln!(r, "# Regression: {}\n", spec.name);
        let _ = writeln!(r, "Corpus: `{}`\n", spec.corpus.display());
        if let Some(index) = &self.index {
            let s = index.stats();
            let ix = &spec.index;
            let _ = writeln!(r, "## Index\n");
            let _ = writeln!(r, "| setting | value |\n|---|---|");
            let _ = writeln!(r, "| documents | {} |", s.doc_count);
            let _ = writeln!(r, "| terms | {} |", index.terms().len());
            let _ = writeln!(r, "| total term occurrences | {} |", s.total_terms);
            let _ = writeln!(r, "| average document length | {} |", format_score(s.avg_doc_length));
            let stemmer = match ix.stemmer {
                StemmerKind::Porter => "porter",
                StemmerKind::None => "none",
            };
            let _ = writeln!(r, "| stemmer | {stemmer} |");
            let _ = writeln!(r, "| stopwords | {} |", ix.stopwords);
            let _ = writeln!(
                r,
                "| stored | positions={} docvectors={} raw={} |\n",
                ix.store_positions, ix.store_docvectors, ix.store_raw
            );
        }
        if !self.rows.is_empty() {
            let _ = writeln!(r, "## Runs\n");
            let _ = writeln!(
                r,
                "| run | model | parameters | output | queries |\n|---|---|---|---|---|"
            );
            for row in &self.rows {
                let _ = writeln!(
                    r,
                    "| {} | {} | {} | `{}` | {} |",
                    row.name,
                    row.model.name(),
                    row.params,
                    row.output,
                    row.queries
                );
            }
            let _ = writeln!(r);
        }
        if !self.checks.is_empty() {
            let _ = writeln!(r, "## Checks\n");
            let _ = writeln!(
                r,
                "| check | expected | observed | tolerance | status |\n|---|---|---|---|---|"
            );
            for c in &self.checks {
                let _ = writeln!(
                    r,
                    "| {} | {} | {} | {} | {} |",
                    c.name,
                    format_score(c.expected),
                    format_score(c.observed),
                    c.tolerance,
                    if c.passed { "PASS" } else { "FAIL" }
                );
            }
            let _ = writeln!(r);
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        match failure {
            Some((stage, err)) => {
                let _ = writeln!(r, "## Failure\n\nStage `{stage}` failed: {err}\n");
                let _ = writeln!(r, "Result: FAIL (pipeline stopped)");
            }
            None if passed == self.checks.len() => {
                let _ = writeln!(r, "Result: PASS ({passed}/{} checks)", self.checks.len());
            }
            None => {
                let failed: Vec<_> = self
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.name.as_str())
                    .collect();
                let _ = writeln!(
                    r,
                    "Result: FAIL ({passed}/{} checks; failed: {})",
                    self.checks.len(),
                    failed.join(", ")
                );
            }
        }
        r
    }
}
