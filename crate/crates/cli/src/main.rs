//! `ferret`: index, search, evaluate, tune and regression-test retrieval runs.
//!
//! Exit codes: 0 success, 1 usage, 2 bad data or failed regression checks,
//! 3 I/O failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ferret::analysis::{resolve_stopwords, AnalyzerConfig, StemmerKind};
use ferret::eval::{self, parse_metrics, read_run, write_run, RunFormat, TopicFormat};
use ferret::search::{parse_grid, tune_grid, TuneOptions};
use ferret::{
    build_index, hybrid_batch, ingest, load_index, load_vectors, Bm25Params, DenseIndex, Error, HnswParams,
    HybridParams, IndexBuildOptions, Metric, Similarity,
};

const USAGE: u8 = 1;
const DATA: u8 = 2;
const IO: u8 = 3;

#[derive(Parser)]
#[command(name = "ferret", version, about = "BM25, dense and hybrid first-stage retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a sparse index from JSON documents, or a dense index from vectors.
    Index(IndexArgs),
    /// Run a batch of queries and write a run file.
    Search(SearchArgs),
    /// Score a run against relevance judgments.
    Eval(EvalArgs),
    /// Grid-search BM25 k1 and b.
    Tune(TuneArgs),
    /// Run a regression spec and write a report.
    Regress(RegressArgs),
}

#[derive(Args)]
struct IndexArgs {
    /// JSON/JSONL file or directory of documents.
    #[arg(long, required_unless_present = "vectors", conflicts_with = "vectors")]
    input: Option<PathBuf>,
    /// Document vectors (.jsonl or binary) for a dense index.
    #[arg(long)]
    vectors: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    store_positions: bool,
    #[arg(long)]
    store_docvectors: bool,
    #[arg(long)]
    store_raw: bool,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// porter or none.
    #[arg(long, default_value = "porter", value_parser = parse_with::<StemmerKind>)]
    stemmer: StemmerKind,
    /// `default`, `none` or a file with one stopword per line.
    #[arg(long, default_value = "default")]
    stopwords: String,
    #[arg(long = "type", value_enum, default_value_t = DenseType::Flat)]
    kind: DenseType,
    /// inner_product (ip) or cosine.
    #[arg(long, default_value = "inner_product", value_parser = parse_with::<Similarity>)]
    similarity: Similarity,
    #[arg(long = "M", default_value_t = HnswParams::default().m)]
    m: usize,
    #[arg(long, default_value_t = HnswParams::default().ef_construction)]
    ef_construction: usize,
    /// Default search breadth stored with the graph.
    #[arg(long, default_value_t = HnswParams::default().ef_search)]
    ef_search: usize,
    #[arg(long, default_value_t = HnswParams::default().seed)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum DenseType {
    Flat,
    Hnsw,
}

#[derive(Args)]
struct SearchArgs {
    /// Sparse index, or dense index when --query-vectors is given.
    #[arg(long, required_unless_present_all = ["dense_run", "sparse_run"])]
    index: Option<PathBuf>,
    #[arg(long, required_unless_present_any = ["query_vectors", "dense_run"])]
    topics: Option<PathBuf>,
    /// tsv or trec; detected from the file when absent.
    #[arg(long, value_parser = parse_with::<TopicFormat>)]
    topics_format: Option<TopicFormat>,
    #[arg(long, default_value = "title")]
    topic_field: String,
    #[arg(long, conflicts_with_all = ["topics", "dense_run"])]
    query_vectors: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1000)]
    hits: usize,
    /// BM25 ranking (the default for sparse indexes).
    #[arg(long)]
    bm25: bool,
    #[arg(long, default_value_t = Bm25Params::default().k1)]
    k1: f64,
    #[arg(long, default_value_t = Bm25Params::default().b)]
    b: f64,
    /// Overrides the search breadth stored with an HNSW index.
    #[arg(long)]
    ef_search: Option<usize>,
    #[arg(long, default_value = "trec", value_parser = parse_with::<RunFormat>)]
    format: RunFormat,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value = eval::DEFAULT_TAG)]
    tag: String,
    /// Dense run to fuse (TREC format).
    #[arg(long, requires_all = ["sparse_run", "alpha"], conflicts_with = "index")]
    dense_run: Option<PathBuf>,
    /// Sparse run to fuse (TREC format).
    #[arg(long, requires = "dense_run")]
    sparse_run: Option<PathBuf>,
    /// Weight on the sparse score in hybrid fusion.
    #[arg(long, requires = "dense_run")]
    alpha: Option<f64>,
    /// Hits taken from each input run before fusion; defaults to --hits.
    #[arg(long, requires = "dense_run")]
    k_candidates: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long)]
    run: PathBuf,
    #[arg(long, default_value = "trec", value_parser = parse_with::<RunFormat>)]
    format: RunFormat,
    /// Comma-separated, e.g. mrr@10,recall@1000,map.
    #[arg(long)]
    metrics: String,
    #[arg(long, default_value_t = eval::DEFAULT_REL_THRESHOLD)]
    rel_threshold: i32,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    topics: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// start:end:step, inclusive.
    #[arg(long)]
    k1_grid: String,
    #[arg(long)]
    b_grid: String,
    #[arg(long, value_parser = parse_with::<Metric>)]
    metric: Metric,
    #[arg(long)]
    hits: Option<usize>,
    #[arg(long, default_value = "title")]
    topic_field: String,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = eval::DEFAULT_REL_THRESHOLD)]
    rel_threshold: i32,
}

#[derive(Args)]
struct RegressArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Output directory; defaults to regressions/<name> under the cache directory.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_with<T>(s: &str) -> Result<T, String>
where
    T: std::str::FromStr<Err = Error>,
{
    s.parse().map_err(|e: Error| e.to_string())
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. } => IO,
            Error::InvalidArgument(_) => USAGE,
            _ => DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Index(a) => cmd_index(a),
        Command::Search(a) => cmd_search(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Regress(a) => cmd_regress(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_index(a: IndexArgs) -> CmdResult {
    if let Some(vectors) = &a.vectors {
        let store = load_vectors(vectors)?;
        let index = match a.kind {
            DenseType::Flat => DenseIndex::flat(store, a.similarity),
            DenseType::Hnsw => {
                let params = HnswParams {
                    m: a.m,
                    ef_construction: a.ef_construction,
                    ef_search: a.ef_search,
                    seed: a.seed,
                };
                DenseIndex::hnsw(store, params, a.similarity)?
            }
        };
        index.save(&a.output)?;
        println!(
            "indexed {} vectors of dimension {} into {}",
            index.store().len(),
            index.store().dim(),
            a.output.display()
        );
        return Ok(());
    }
    let input = a.input.as_ref().expect("clap requires --input without --vectors");
    let opts = IndexBuildOptions {
        store_positions: a.store_positions,
        store_docvectors: a.store_docvectors,
        store_raw: a.store_raw,
        analyzer: AnalyzerConfig {
            lowercase: true,
            stopwords: resolve_stopwords(&a.stopwords)?,
            stem: a.stemmer,
        },
        threads: a.threads.max(1),
    };
    let index = build_index(ingest(input)?.documents(), &opts, &a.output)?;
    println!(
        "indexed {} documents, {} terms into {}",
        index.doc_count(),
        index.terms().len(),
        a.output.display()
    );
    Ok(())
}

fn load_topics(path: &Path, format: Option<TopicFormat>) -> ferret::Result<ferret::Topics> {
    match format {
        Some(f) => eval::load_topics(path, f),
        None => eval::load_topics_auto(path),
    }
}

fn cmd_search(a: SearchArgs) -> CmdResult {
    let mut run = if let (Some(dense), Some(sparse)) = (&a.dense_run, &a.sparse_run) {
        let alpha = a.alpha.expect("clap requires --alpha with --dense-run");
        let params = HybridParams::new(alpha, a.hits, a.k_candidates.unwrap_or(a.hits))?;
        hybrid_batch(
            &read_run(dense, RunFormat::Trec)?,
            &read_run(sparse, RunFormat::Trec)?,
            &params,
        )?
    } else {
        let index_dir = a.index.as_ref().expect("clap requires --index");
        if let Some(qv) = &a.query_vectors {
            let queries = load_vectors(qv)?;
            DenseIndex::load(index_dir)?.batch_search(&queries, a.hits, a.ef_search, a.threads.max(1))?
        } else {
            let topics = load_topics(a.topics.as_ref().expect("clap requires --topics"), a.topics_format)?;
            let index = load_index(index_dir)?;
            let params = Bm25Params::new(a.k1, a.b)?;
            index.batch_search(&topics, &a.topic_field, a.hits, params, a.threads.max(1))?
        }
    };
    run.tag = a.tag;
    write_run(&run, &a.output, a.format)?;
    log::info!("wrote {} queries to {}", run.len(), a.output.display());
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> CmdResult {
    let metrics = parse_metrics(&a.metrics)?;
    if metrics.is_empty() {
        return Err(Error::InvalidArgument(format!("no metrics given (supported: {})", Metric::SUPPORTED)).into());
    }
    let qrels = eval::load_qrels(&a.qrels)?;
    let run = read_run(&a.run, a.format)?;
    let mut counts = None;
    for metric in metrics {
        let e = eval::evaluate(&run, &qrels, metric, a.rel_threshold)?;
        println!("{}\t{}", e.metric, eval::format_score(e.value));
        counts = Some((e.queries_evaluated, e.queries_skipped));
    }
    let (evaluated, skipped) = counts.expect("at least one metric");
    println!("queries_evaluated\t{evaluated}");
    println!("queries_skipped\t{skipped}");
    Ok(())
}

fn cmd_tune(a: TuneArgs) -> CmdResult {
    let k1s = parse_grid(&a.k1_grid)?;
    let bs = parse_grid(&a.b_grid)?;
    let index = load_index(&a.index)?;
    let topics = eval::load_topics_auto(&a.topics)?;
    let qrels = eval::load_qrels(&a.qrels)?;
    let opts = TuneOptions {
        metric: a.metric,
        hits: a.hits,
        field: a.topic_field,
        threads: a.threads.max(1),
        rel_threshold: a.rel_threshold,
    };
    let result = tune_grid(&index, &topics, &qrels, &k1s, &bs, &opts)?;
    println!("k1\tb\t{}", a.metric);
    for p in &result.table {
        println!("{}\t{}\t{}", p.params.k1, p.params.b, eval::format_score(p.value));
    }
    println!(
        "best\tk1={}\tb={}\t{}={}",
        result.best.params.k1,
        result.best.params.b,
        a.metric,
        eval::format_score(result.best.value)
    );
    Ok(())
}

fn cmd_regress(a: RegressArgs) -> CmdResult {
    let output = match a.output {
        Some(dir) => dir,
        None => {
            let spec = ferret::RegressionSpec::load(&a.spec)?;
            ferret::cache_dir().join("regressions").join(spec.name)
        }
    };
    let outcome = ferret::run_regression(&a.spec, &output)?;
    for check in &outcome.checks {
        println!(
            "{}\t{}\texpected {}\tobserved {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            eval::format_score(check.expected),
            eval::format_score(check.observed)
        );
    }
    println!("report: {}", outcome.report_path.display());
    if let Some((stage, err)) = outcome.failure {
        let mut f = Failure::from(err);
        f.message = format!("{stage}: {}", f.message);
        return Err(f);
    }
    if !outcome.passed() {
        let failed: Vec<_> = outcome.failed_checks().map(|c| c.name.as_str()).collect();
        return Err(Failure {
            code: DATA,
            message: format!("failed checks: {}", failed.join(", ")),
        });
    }
    Ok(())
}
