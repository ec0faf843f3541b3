mod common;

use common::*;
use ferret::analysis::{AnalyzerConfig, StemmerKind};
use ferret::eval::{self, Metric, Qrels, Run, RunFormat, Topics};
use ferret::search::{aggregate_max_passage, tune_grid, TuneOptions};
use ferret::{build_index, ingest, Bm25Params, IndexBuildOptions, IndexReader, RankedList, SparseIndex};

fn toy(analyzer: AnalyzerConfig) -> (tempfile::TempDir, SparseIndex) {
    let dir = tempfile::tempdir().unwrap();
    let docs = ingest(fixtures().join("toy/corpus")).unwrap();
    let index = build_index(docs.documents(), &IndexBuildOptions::full(analyzer), dir.path()).unwrap();
    (dir, index)
}

fn bare() -> AnalyzerConfig {
    AnalyzerConfig {
        stem: StemmerKind::None,
        ..AnalyzerConfig::plain()
    }
}

#[test]
fn toy_run_matches_golden() {
    let (_dir, index) = toy(AnalyzerConfig::default());
    let topics = eval::load_topics_auto(fixtures().join("toy/topics.tsv")).unwrap();
    let run = index
        .batch_search(&topics, "title", 1000, Bm25Params::default(), 1)
        .unwrap();
    let golden = std::fs::read_to_string(fixtures().join("toy/golden_bm25.trec")).unwrap();
    assert_eq!(run.to_text(RunFormat::Trec), golden);
    // The stopword-only topic retrieves nothing.
    assert!(run.get("q4").unwrap().is_empty());
}

#[test]
fn mini_run_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let docs = ingest(fixtures().join("mini/corpus")).unwrap();
    let index = build_index(docs.documents(), &IndexBuildOptions::default(), dir.path()).unwrap();
    let topics = eval::load_topics_auto(fixtures().join("mini/topics.tsv")).unwrap();
    let run = index
        .batch_search(&topics, "title", 10, Bm25Params::default(), 3)
        .unwrap();
    let golden = std::fs::read_to_string(fixtures().join("mini/golden_bm25.trec")).unwrap();
    assert_eq!(run.to_text(RunFormat::Trec), golden);
}

#[test]
fn reader_on_toy_corpus() {
    let (_dir, index) = toy(bare());
    let reader = IndexReader::new(&index);
    assert_eq!(
        reader.terms().next().map(|t| (t.term.as_str(), t.df, t.cf)),
        Some(("a", 1, 1))
    );
    assert_eq!(reader.term_counts("cat", true), (2, 3));
    let postings: Vec<_> = reader
        .postings("cat", true)
        .unwrap()
        .into_iter()
        .map(|p| (p.docid, p.tf, p.positions))
        .collect();
    assert_eq!(
        postings,
        [("d1".to_owned(), 1, vec![1]), ("d2".to_owned(), 2, vec![0, 1])]
    );
    let v = reader.doc_vector("d2").unwrap();
    assert_eq!(
        v.into_iter().collect::<Vec<_>>(),
        [("cat".to_owned(), 2), ("dog".to_owned(), 1)]
    );
    let pos = reader.term_positions("d2").unwrap();
    assert_eq!(pos["cat"], [0, 1]);
    assert_eq!(pos["dog"], [2]);
    assert_eq!(reader.fetch_doc("d1").unwrap().contents, "a cat");
    let w = reader.bm25_weight("d2", "cat", Bm25Params::default()).unwrap();
    assert!((w - 0.579_874_607_510_972).abs() < 1e-12);
}

#[test]
fn unanalyzed_lookup_matches_analyzed() {
    let dir = tempfile::tempdir().unwrap();
    let docs = ingest(fixtures().join("mini/corpus")).unwrap();
    let index = build_index(
        docs.documents(),
        &IndexBuildOptions::full(AnalyzerConfig::default()),
        dir.path(),
    )
    .unwrap();
    let reader = IndexReader::new(&index);
    assert_eq!(
        reader.analyze("Atomic ENERGY commissions"),
        ["atom", "energi", "commiss"]
    );
    let counts = reader.term_counts("atomic", false);
    assert!(counts.0 > 0);
    assert_eq!(counts, reader.term_counts("atom", true));
    assert_eq!(reader.term_counts("atomic", true), (0, 0));
}

#[test]
fn tune_finds_exhaustive_best() {
    let dir = tempfile::tempdir().unwrap();
    let docs = vec![
        ferret::JsonDocument::new("a", "lobster roll lobster"),
        ferret::JsonDocument::new("b", "lobster bisque with a long list of other ingredients and garnish"),
        ferret::JsonDocument::new("c", "roll of film"),
        ferret::JsonDocument::new("d", "maine lobster roll shack"),
        ferret::JsonDocument::new("e", "bread roll"),
    ];
    let index = build_index(
        docs.into_iter().map(Ok),
        &IndexBuildOptions::full(AnalyzerConfig::default()),
        dir.path(),
    )
    .unwrap();
    let relevant = [("q1", "lobster roll", "d"), ("q2", "roll", "e")];
    let mut topics = Topics::new();
    let mut qrels = Qrels::new();
    for (qid, query, rel) in relevant {
        topics.insert_title(qid, query);
        qrels.insert(qid, rel, 1);
    }
    let k1s = [0.2, 0.9, 1.5, 3.0];
    let bs = [0.0, 0.4, 0.75, 1.0];

    let mut best: Option<(f64, f64, f64)> = None;
    for &k1 in &k1s {
        for &b in &bs {
            // One relevant document per query, so AP is the reciprocal rank.
            let map = relevant
                .iter()
                .map(|(_, query, rel)| {
                    let ranked = brute_force_bm25(&index, query, 10, k1, b);
                    ranked
                        .iter()
                        .position(|(d, _)| d == rel)
                        .map_or(0.0, |r| 1.0 / (r + 1) as f64)
                })
                .sum::<f64>()
                / relevant.len() as f64;
            if best.map_or(true, |(_, _, v)| map > v + 1e-12) {
                best = Some((k1, b, map));
            }
        }
    }
    let (k1, b, map) = best.unwrap();
    let result = tune_grid(&index, &topics, &qrels, &k1s, &bs, &TuneOptions::new(Metric::Map)).unwrap();
    assert_eq!(result.table.len(), 16);
    assert_eq!((result.best.params.k1, result.best.params.b), (k1, b));
    assert!((result.best.value - map).abs() < 1e-6);

    let single = tune_grid(&index, &topics, &qrels, &[1.1], &[0.3], &TuneOptions::new(Metric::Map)).unwrap();
    assert_eq!((single.best.params.k1, single.best.params.b), (1.1, 0.3));
    assert!(tune_grid(&index, &topics, &qrels, &[], &bs, &TuneOptions::new(Metric::Map)).is_err());
}

#[test]
fn max_passage_example() {
    let list = RankedList::from_scores(
        "q",
        vec![("D1#0".into(), 3.0), ("D1#3".into(), 5.0), ("D2#1".into(), 4.0)],
        10,
    );
    let docs = aggregate_max_passage(&Run::from_lists("t", [list]), "#");
    assert_eq!(
        pairs(docs.get("q").unwrap()),
        [("D1".to_owned(), 5.0), ("D2".to_owned(), 4.0)]
    );
}
