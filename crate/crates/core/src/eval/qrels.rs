use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Relevance judgments: qid → docid → grade.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels(BTreeMap<String, BTreeMap<String, i32>>);

impl Qrels {
    pub fn new() -> Self {
        Qrels::default()
    }

    /// Sets a judgment, returning the previous grade if there was one.
    pub fn insert(&mut self, qid: impl Into<String>, docid: impl Into<String>, grade: i32) -> Option<i32> {
        self.0.entry(qid.into()).or_default().insert(docid.into(), grade)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, qid: &str) -> Option<&BTreeMap<String, i32>> {
        self.0.get(qid)
    }

    pub fn contains_query(&self, qid: &str) -> bool {
        self.0.contains_key(qid)
    }

    pub fn grade(&self, qid: &str, docid: &str) -> Option<i32> {
        self.0.get(qid)?.get(docid).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, i32>)> {
        self.0.iter().map(|(q, j)| (q.as_str(), j))
    }

    pub fn qids(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// Number of documents with grade ≥ `threshold` for `qid`.
    pub fn num_relevant(&self, qid: &str, threshold: i32) -> usize {
        self.0
            .get(qid)
            .map_or(0, |j| j.values().filter(|&&g| g >= threshold).count())
    }

    pub fn as_map(&self) -> &BTreeMap<String, BTreeMap<String, i32>> {
        &self.0
    }
}

/// Reads `qid <ignored> docid grade` lines.
pub fn load_qrels(path: impl AsRef<Path>) -> Result<Qrels> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_qrels(&text, path)
}

pub fn parse_qrels(text: &str, path: &Path) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for (i, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 4 {
            return Err(Error::parse(path, i + 1, "expected `qid iter docid grade`"));
        }
        let grade: i32 = fields[3]
            .parse()
            .map_err(|_| Error::parse(path, i + 1, format!("non-integer grade `{}`", fields[3])))?;
        if let Some(prev) = qrels.insert(fields[0], fields[2], grade) {
            log::warn!(
                "{}:{}: duplicate judgment for ({}, {}); grade {} replaces {}",
                path.display(),
                i + 1,
                fields[0],
                fields[2],
                grade,
                prev
            );
        }
    }
    Ok(qrels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_line() {
        let qrels = parse_qrels("q1 0 d7 1\n", Path::new("q")).unwrap();
        assert_eq!(qrels.grade("q1", "d7"), Some(1));
    }

    #[test]
    fn later_duplicate_wins() {
        let qrels = parse_qrels("q1 0 d7 1\r\nq1 0 d7 3\n", Path::new("q")).unwrap();
        assert_eq!(qrels.grade("q1", "d7"), Some(3));
        assert_eq!(qrels.get("q1").unwrap().len(), 1);
    }

    #[test]
    fn bad_lines() {
        let err = parse_qrels("q1 0 d7 1\nq1 0 d8\n", Path::new("q")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_qrels("q1 0 d7 high\n", Path::new("q")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn relevance_threshold() {
        let qrels = parse_qrels("q 0 a 0\nq 0 b 1\nq 0 c 2\n", Path::new("q")).unwrap();
        assert_eq!(qrels.num_relevant("q", 1), 2);
        assert_eq!(qrels.num_relevant("q", 2), 1);
        assert_eq!(qrels.num_relevant("missing", 1), 0);
    }
}
