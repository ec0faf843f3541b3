//! Test collections (topics, qrels), run files and effectiveness metrics.

pub mod metrics;
mod qrels;
mod run;
mod topics;

pub use metrics::{average_precision, evaluate, mrr, parse_metrics, recall, Evaluation, Metric, DEFAULT_REL_THRESHOLD};
pub use qrels::{load_qrels, parse_qrels, Qrels};
pub use run::{format_score, parse_run, read_run, write_run, Run, RunFormat, DEFAULT_TAG};
pub use topics::{load_topics, load_topics_auto, parse_trec, parse_tsv, TopicFormat, Topics};
