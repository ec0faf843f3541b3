use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::ranking::{RankedList, ScoredDoc};

pub const DEFAULT_TAG: &str = "ferret";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunFormat {
    /// `qid Q0 docid rank score tag`
    Trec,
    /// `qid<TAB>docid<TAB>rank`
    Msmarco,
}

impl std::str::FromStr for RunFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trec" => Ok(RunFormat::Trec),
            "msmarco" => Ok(RunFormat::Msmarco),
            other => Err(Error::InvalidArgument(format!(
                "unknown run format `{other}` (expected trec or msmarco)"
            ))),
        }
    }
}

/// Ranked lists for a set of queries, keyed (and written) in qid order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Run {
    pub tag: String,
    pub lists: BTreeMap<String, RankedList>,
}

impl Run {
    pub fn new(tag: impl Into<String>) -> Self {
        Run {
            tag: tag.into(),
            lists: BTreeMap::new(),
        }
    }

    pub fn from_lists(tag: impl Into<String>, lists: impl IntoIterator<Item = RankedList>) -> Self {
        let mut run = Run::new(tag);
        for list in lists {
            run.insert(list);
        }
        run
    }

    pub fn insert(&mut self, list: RankedList) {
        self.lists.insert(list.qid.clone(), list);
    }

    pub fn get(&self, qid: &str) -> Option<&RankedList> {
        self.lists.get(qid)
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &RankedList> {
        self.lists.values()
    }

    pub fn to_text(&self, format: RunFormat) -> String {
        let mut out = String::new();
        for list in self.lists.values() {
            for hit in &list.hits {
                match format {
                    RunFormat::Trec => writeln!(
                        out,
                        "{} Q0 {} {} {} {}",
                        list.qid,
                        hit.docid,
                        hit.rank,
                        format_score(hit.score),
                        self.tag
                    ),
                    RunFormat::Msmarco => writeln!(out, "{}\t{}\t{}", list.qid, hit.docid, hit.rank),
                }
                .expect("writing to a String");
            }
        }
        out
    }
}

/// Six decimal places, exact ties rounded half to even.
pub fn format_score(score: f64) -> String {
    format!("{score:.6}")
}

pub fn write_run(run: &Run, path: impl AsRef<Path>, format: RunFormat) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, run.to_text(format)).map_err(|e| Error::io(path, e))
}

pub fn read_run(path: impl AsRef<Path>, format: RunFormat) -> Result<Run> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_run(&text, format, path)
}

/// Parses a run file. Ranks must run 1, 2, 3, … per query and TREC scores
/// must be non-increasing. MS MARCO files carry no scores; hit `r` gets the
/// synthetic score `1/r`.
pub fn parse_run(text: &str, format: RunFormat, path: &Path) -> Result<Run> {
    let mut run = Run::new(DEFAULT_TAG);
    let mut tag: Option<String> = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (qid, docid, rank, score) = match format {
            RunFormat::Trec => {
                let f: Vec<&str> = line.split_whitespace().collect();
                if f.len() != 6 {
                    return Err(Error::parse(path, line_no, "expected `qid Q0 docid rank score tag`"));
                }
                let rank = parse_rank(f[3], path, line_no)?;
                let score: f64 = f[4]
                    .parse()
                    .ok()
                    .filter(|s: &f64| s.is_finite())
                    .ok_or_else(|| Error::parse(path, line_no, format!("bad score `{}`", f[4])))?;
                if tag.is_none() {
                    tag = Some(f[5].to_owned());
                }
                (f[0], f[2], rank, score)
            }
            RunFormat::Msmarco => {
                let f: Vec<&str> = line.split('\t').collect();
                if f.len() != 3 {
                    return Err(Error::parse(path, line_no, "expected `qid<TAB>docid<TAB>rank`"));
                }
                let rank = parse_rank(f[2].trim(), path, line_no)?;
                (f[0].trim(), f[1].trim(), rank, 1.0 / rank as f64)
            }
        };
        let list = run
            .lists
            .entry(qid.to_owned())
            .or_insert_with(|| RankedList::empty(qid));
        if rank != list.hits.len() + 1 {
            return Err(Error::parse(
                path,
                line_no,
                format!(
                    "rank {rank} for {qid} breaks sequence (expected {})",
                    list.hits.len() + 1
                ),
            ));
        }
        if let Some(prev) = list.hits.last() {
            if score > prev.score {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!("score {score} for {qid} exceeds the previous rank's {}", prev.score),
                ));
            }
        }
        if list.hits.iter().any(|h| h.docid == docid) {
            return Err(Error::parse(
                path,
                line_no,
                format!("duplicate docid {docid} for {qid}"),
            ));
        }
        list.hits.push(ScoredDoc {
            docid: docid.to_owned(),
            score,
            rank,
        });
    }
    if let Some(tag) = tag {
        run.tag = tag;
    }
    Ok(run)
}

fn parse_rank(s: &str, path: &Path, line_no: usize) -> Result<usize> {
    s.parse::<usize>()
        .ok()
        .filter(|&r| r >= 1)
        .ok_or_else(|| Error::parse(path, line_no, format!("bad rank `{s}`")))
}
