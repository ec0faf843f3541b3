//! JSON document collections.
//!
//! A collection is a file or a directory tree of `.json` files (one object or
//! an array of objects) and `.jsonl` files (one object per line). Each record
//! needs a string `id` and a string `contents`; `raw` is optional and other
//! fields are ignored.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonDocument {
    pub id: String,
    pub contents: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
}

impl JsonDocument {
    pub fn new(id: impl Into<String>, contents: impl Into<String>) -> Self {
        JsonDocument {
            id: id.into(),
            contents: contents.into(),
            raw: None,
        }
    }

    fn from_value(value: Value, record: impl Fn() -> String) -> Result<Self> {
        let invalid = |message: &str| Error::InvalidDocument {
            record: record(),
            message: message.to_owned(),
        };
        let Value::Object(mut obj) = value else {
            return Err(invalid("expected a JSON object"));
        };
        let id = match obj.remove("id") {
            Some(Value::String(s)) if !s.is_empty() => s,
            Some(Value::String(_)) => return Err(invalid("empty `id`")),
            Some(_) => return Err(invalid("`id` must be a string")),
            None => return Err(invalid("missing `id`")),
        };
        let contents = match obj.remove("contents") {
            Some(Value::String(s)) => s,
            Some(_) => return Err(invalid("`contents` must be a string")),
            None => return Err(invalid("missing `contents`")),
        };
        let raw = match obj.remove("raw") {
            Some(Value::String(s)) => Some(s),
            Some(Value::Null) | None => None,
            Some(_) => return Err(invalid("`raw` must be a string")),
        };
        Ok(JsonDocument { id, contents, raw })
    }
}

/// The ordered set of files making up a collection.
#[derive(Debug, Clone)]
pub struct JsonCollection {
    files: Vec<PathBuf>,
}

/// Opens a collection. Files are visited in lexicographic path order.
pub fn ingest(path: impl AsRef<Path>) -> Result<JsonCollection> {
    let path = path.as_ref();
    let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
    let mut files = Vec::new();
    if meta.is_dir() {
        collect_files(path, &mut files)?;
        files.sort();
    } else {
        files.push(path.to_path_buf());
    }
    Ok(JsonCollection { files })
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let kind = entry.file_type().map_err(|e| Error::io(&path, e))?;
        if kind.is_dir() {
            collect_files(&path, out)?;
        } else if is_collection_file(&path) {
            out.push(path);
        }
    }
    Ok(())
}

fn is_collection_file(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("json") | Some("jsonl"))
}

impl JsonCollection {
    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }

    /// Streams documents: files in order, records in file order.
    pub fn documents(&self) -> impl Iterator<Item = Result<JsonDocument>> + '_ {
        self.files
            .iter()
            .flat_map(|path| -> Box<dyn Iterator<Item = Result<JsonDocument>>> {
                match read_file(path) {
                    Ok(iter) => iter,
                    Err(e) => Box::new(std::iter::once(Err(e))),
                }
            })
    }

    pub fn read_all(&self) -> Result<Vec<JsonDocument>> {
        self.documents().collect()
    }
}

fn read_file(path: &Path) -> Result<Box<dyn Iterator<Item = Result<JsonDocument>>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    if path.extension().and_then(|e| e.to_str()) == Some("jsonl") {
        return Ok(Box::new(JsonlRecords {
            path: path.to_path_buf(),
            lines: BufReader::new(file).lines(),
            line_no: 0,
        }));
    }
    let value: Value =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    let display = path.display().to_string();
    match value {
        Value::Array(items) => {
            Ok(Box::new(items.into_iter().enumerate().map(move |(i, v)| {
                JsonDocument::from_value(v, || format!("{display}[{i}]"))
            })))
        }
        other => Ok(Box::new(std::iter::once(JsonDocument::from_value(other, || {
            display.clone()
        })))),
    }
}

struct JsonlRecords {
    path: PathBuf,
    lines: std::io::Lines<BufReader<File>>,
    line_no: usize,
}

impl Iterator for JsonlRecords {
    type Item = Result<JsonDocument>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => return Some(Err(Error::io(&self.path, e))),
            };
            if line.trim().is_empty() {
                continue;
            }
            let value: Value = match serde_json::from_str(&line) {
                Ok(v) => v,
                Err(e) => return Some(Err(Error::parse(&self.path, self.line_no, e.to_string()))),
            };
            let (path, line_no) = (&self.path, self.line_no);
            return Some(JsonDocument::from_value(value, || {
                format!("{}:{}", path.display(), line_no)
            }));
        }
    }
}
