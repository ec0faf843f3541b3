//! Vector files.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! magic  "FVEC"          4 bytes
//! version u32            currently 1
//! dim     u32
//! count   u64
//! data    count × dim × f32, row-major
//! ids     count × (u32 byte length, UTF-8 bytes)
//! ```
//!
//! The JSONL alternative has one `{"id": ..., "vector": [...]}` object per
//! line; the first row fixes the dimension.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::format::{Decoder, Encoder};

pub const VECTOR_MAGIC: &[u8; 4] = b"FVEC";
pub const VECTOR_VERSION: u32 = 1;

/// Dense vectors with external ids, stored row-major as `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
    norms: Vec<f32>,
}

impl VectorStore {
    pub fn new(dim: usize, ids: Vec<String>, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("vector dimension must be ≥ 1".into()));
        }
        if data.len() != ids.len() * dim {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} vectors of dimension {dim}",
                data.len(),
                ids.len()
            )));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateDocId(id.clone()));
            }
            if data[i * dim..(i + 1) * dim].iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(id.clone()));
            }
        }
        let norms = data.chunks_exact(dim).map(|row| dot(row, row).sqrt()).collect();
        Ok(VectorStore { dim, ids, data, norms })
    }

    /// Builds a store from `(id, vector)` rows; every row must have `dim`
    /// values.
    pub fn from_rows(dim: usize, rows: impl IntoIterator<Item = (String, Vec<f32>)>) -> Result<Self> {
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for (id, row) in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    id,
                    expected: dim,
                    found: row.len(),
                });
            }
            ids.push(id);
            data.extend(row);
        }
        VectorStore::new(dim, ids, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn norm(&self, i: usize) -> f32 {
        self.norms[i]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks_exact(self.dim))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder::default();
        enc.bytes(VECTOR_MAGIC);
        enc.u32(VECTOR_VERSION);
        enc.u32(self.dim as u32);
        enc.u64(self.ids.len() as u64);
        for &v in &self.data {
            enc.f32(v);
        }
        for id in &self.ids {
            enc.str(id);
        }
        enc.into_inner()
    }

    pub fn from_bytes(file: &str, buf: &[u8]) -> Result<Self> {
        let mut dec = Decoder::new(file, buf);
        if dec.bytes(4)? != VECTOR_MAGIC {
            return Err(Error::corrupt(file, "bad magic"));
        }
        let version = dec.u32()?;
        if version != VECTOR_VERSION {
            return Err(Error::Version {
                found: version,
                expected: VECTOR_VERSION,
            });
        }
        let dim = dec.u32()? as usize;
        let count = dec.u64()? as usize;
        let data = dec.f32s(
            count
                .checked_mul(dim)
                .ok_or_else(|| Error::corrupt(file, "size overflow"))?,
        )?;
        let ids = (0..count).map(|_| dec.str()).collect::<Result<Vec<_>>>()?;
        dec.finish()?;
        VectorStore::new(dim, ids, data)
    }
}

pub(crate) fn dot(a: &[f32], b: &[f32]) -> f32 {
    // `Sum` starts from -0.0; an all-zero product must score +0.0.
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

#[derive(Serialize, Deserialize)]
struct JsonVector {
    id: String,
    vector: Vec<f32>,
}

/// Loads a binary vector file (detected by its magic) or JSONL.
pub fn load_vectors(path: impl AsRef<Path>) -> Result<VectorStore> {
    let path = path.as_ref();
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if buf.starts_with(VECTOR_MAGIC) {
        let name = path.display().to_string();
        return VectorStore::from_bytes(&name, &buf);
    }
    parse_jsonl(BufReader::new(buf.as_slice()), path)
}

fn parse_jsonl(reader: impl BufRead, path: &Path) -> Result<VectorStore> {
    let mut dim = None;
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        // Parse numbers as f64 first so that overflow is reported as
        // non-finite instead of a JSON error.
        let row: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        let id = row
            .get("id")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::parse(path, i + 1, "missing string `id`"))?
            .to_owned();
        let values = row
            .get("vector")
            .and_then(|v| v.as_array())
            .ok_or_else(|| Error::parse(path, i + 1, format!("missing `vector` for `{id}`")))?;
        let expected = *dim.get_or_insert(values.len());
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                id,
                expected,
                found: values.len(),
            });
        }
        for v in values {
            let x = v
                .as_f64()
                .ok_or_else(|| Error::parse(path, i + 1, format!("non-numeric value in `{id}`")))?;
            let x = x as f32;
            if !x.is_finite() {
                return Err(Error::NonFinite(id));
            }
            data.push(x);
        }
        ids.push(id);
    }
    let dim = dim.ok_or_else(|| Error::parse(path, 0, "no vectors"))?;
    VectorStore::new(dim, ids, data)
}

pub fn write_vectors(store: &VectorStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, store.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_vectors_jsonl(store: &VectorStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (id, row) in store.rows() {
        let line = serde_json::to_string(&JsonVector {
            id: id.to_owned(),
            vector: row.to_vec(),
        })
        .expect("vectors serialize");
        out.extend_from_slice(line.as_bytes());
        out.push(b'\n');
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))
}
