use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopicFormat {
    /// `qid<TAB>title` per line.
    Tsv,
    /// Classic `<top>` / `<num>` / `<title>` / `<desc>` / `<narr>` markup.
    Trec,
}

impl std::str::FromStr for TopicFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tsv" => Ok(TopicFormat::Tsv),
            "trec" => Ok(TopicFormat::Trec),
            other => Err(Error::InvalidArgument(format!(
                "unknown topic format `{other}` (expected tsv or trec)"
            ))),
        }
    }
}

impl TopicFormat {
    /// `Trec` if the first non-blank text is a `<top>` tag, else `Tsv`.
    pub fn detect(text: &str) -> Self {
        if text.trim_start().starts_with("<top>") {
            TopicFormat::Trec
        } else {
            TopicFormat::Tsv
        }
    }
}

/// Query texts keyed by qid, each with named fields (`title`, and optionally
/// `description` and `narrative`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Topics(BTreeMap<String, BTreeMap<String, String>>);

impl Topics {
    pub fn new() -> Self {
        Topics::default()
    }

    /// Adds a topic with only a title. Returns false if the qid exists.
    pub fn insert_title(&mut self, qid: impl Into<String>, title: impl Into<String>) -> bool {
        let qid = qid.into();
        if self.0.contains_key(&qid) {
            return false;
        }
        let mut fields = BTreeMap::new();
        fields.insert("title".to_owned(), title.into());
        self.0.insert(qid, fields);
        true
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, qid: &str) -> Option<&BTreeMap<String, String>> {
        self.0.get(qid)
    }

    pub fn title(&self, qid: &str) -> Option<&str> {
        self.field(qid, "title")
    }

    pub fn field(&self, qid: &str, field: &str) -> Option<&str> {
        self.0.get(qid)?.get(field).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BTreeMap<String, String>)> {
        self.0.iter().map(|(q, f)| (q.as_str(), f))
    }

    /// `(qid, text)` pairs for one field, in qid order. Topics lacking the
    /// field are omitted.
    pub fn queries(&self, field: &str) -> Vec<(&str, &str)> {
        self.0
            .iter()
            .filter_map(|(q, f)| f.get(field).map(|t| (q.as_str(), t.as_str())))
            .collect()
    }

    pub fn as_map(&self) -> &BTreeMap<String, BTreeMap<String, String>> {
        &self.0
    }
}

pub fn load_topics(path: impl AsRef<Path>, format: TopicFormat) -> Result<Topics> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        TopicFormat::Tsv => parse_tsv(&text, path),
        TopicFormat::Trec => parse_trec(&text, path),
    }
}

/// Loads topics, detecting the format from the file contents.
pub fn load_topics_auto(path: impl AsRef<Path>) -> Result<Topics> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match TopicFormat::detect(&text) {
        TopicFormat::Tsv => parse_tsv(&text, path),
        TopicFormat::Trec => parse_trec(&text, path),
    }
}

pub fn parse_tsv(text: &str, path: &Path) -> Result<Topics> {
    let mut topics = Topics::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (qid, title) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected qid<TAB>title"))?;
        let qid = qid.trim();
        if qid.is_empty() {
            return Err(Error::parse(path, i + 1, "empty qid"));
        }
        if !topics.insert_title(qid, title.trim()) {
            return Err(Error::parse(path, i + 1, format!("duplicate qid `{qid}`")));
        }
    }
    Ok(topics)
}

const FIELD_TAGS: [(&str, &str, &str); 4] = [
    ("num", "num", "Number:"),
    ("title", "title", "Topic:"),
    ("desc", "description", "Description:"),
    ("narr", "narrative", "Narrative:"),
];

pub fn parse_trec(text: &str, path: &Path) -> Result<Topics> {
    let mut topics = Topics::new();
    // (line where <top> opened, fields collected so far)
    let mut open: Option<(usize, BTreeMap<String, String>)> = None;
    let mut field: Option<&str> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let mut rest = raw.trim_end_matches('\r').trim();
        if let Some(tag_line) = rest.strip_prefix('<') {
            let Some((tag, after)) = tag_line.split_once('>') else {
                return Err(Error::parse(path, line_no, "unterminated tag"));
            };
            let tag = tag.trim().to_ascii_lowercase();
            rest = after.trim();
            match tag.as_str() {
                "top" => {
                    if open.is_some() {
                        return Err(Error::parse(path, line_no, "nested <top>"));
                    }
                    open = Some((line_no, BTreeMap::new()));
                    field = None;
                }
                "/top" => {
                    let Some((_, fields)) = open.take() else {
                        return Err(Error::parse(path, line_no, "</top> without <top>"));
                    };
                    finish_topic(&mut topics, fields, path, line_no)?;
                    field = None;
                }
                t => {
                    let Some((_, name, _)) = FIELD_TAGS.iter().find(|(tag, _, _)| *tag == t) else {
                        if t.starts_with('/') {
                            continue;
                        }
                        return Err(Error::parse(path, line_no, format!("unknown tag <{t}>")));
                    };
                    let Some((_, fields)) = open.as_mut() else {
                        return Err(Error::parse(path, line_no, format!("<{t}> outside <top>")));
                    };
                    fields.insert((*name).to_owned(), String::new());
                    field = Some(name);
                }
            }
        }
        if rest.is_empty() {
            continue;
        }
        let (Some((_, fields)), Some(name)) = (open.as_mut(), field) else {
            return Err(Error::parse(path, line_no, "text outside a topic field"));
        };
        let rest = strip_closing_tag(rest);
        let value = fields.get_mut(name).expect("field opened");
        if !value.is_empty() {
            value.push(' ');
        }
        value.push_str(rest);
    }
    if let Some((line, _)) = open {
        return Err(Error::parse(path, line, "<top> never closed"));
    }
    Ok(topics)
}

fn strip_closing_tag(s: &str) -> &str {
    match s.rfind("</") {
        Some(idx) if s.ends_with('>') => s[..idx].trim_end(),
        _ => s,
    }
}

fn finish_topic(topics: &mut Topics, mut fields: BTreeMap<String, String>, path: &Path, line_no: usize) -> Result<()> {
    for (_, name, prefix) in FIELD_TAGS {
        if let Some(v) = fields.get_mut(name) {
            let trimmed = v.trim();
            let trimmed = trimmed.strip_prefix(prefix).unwrap_or(trimmed).trim();
            *v = trimmed.to_owned();
        }
    }
    let qid = fields
        .remove("num")
        .filter(|q| !q.is_empty())
        .ok_or_else(|| Error::parse(path, line_no, "topic without <num>"))?;
    if !fields.contains_key("title") {
        return Err(Error::parse(path, line_no, format!("topic {qid} has no <title>")));
    }
    if topics.0.contains_key(&qid) {
        return Err(Error::parse(path, line_no, format!("duplicate qid `{qid}`")));
    }
    topics.0.insert(qid, fields);
    Ok(())
}
