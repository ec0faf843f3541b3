//! Little-endian encoding helpers and file checksums shared by the on-disk
//! formats.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub(crate) struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn bytes(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }

    /// u32 length prefix followed by UTF-8 bytes.
    pub fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub fn u32s(&mut self, vs: &[u32]) {
        self.buf.reserve(vs.len() * 4);
        for &v in vs {
            self.u32(v);
        }
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct Decoder<'a> {
    file: &'a str,
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Decoder<'a> {
    pub fn new(file: &'a str, buf: &'a [u8]) -> Self {
        Decoder { file, buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.buf.len())
            .ok_or_else(|| Error::corrupt(self.file, format!("truncated at byte {}", self.pos)))?;
        let slice = &self.buf[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        self.take(n)
    }

    pub fn str(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| Error::corrupt(self.file, format!("invalid UTF-8 before byte {}", self.pos)))
    }

    pub fn u32s(&mut self, n: usize) -> Result<Vec<u32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| self.overflow())?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| self.overflow())?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn overflow(&self) -> Error {
        Error::corrupt(self.file, "length overflow")
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::corrupt(
                self.file,
                format!("{} trailing bytes", self.buf.len() - self.pos),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileEntry {
    pub bytes: u64,
    pub sha256: String,
}

pub(crate) fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Writes `data` to `dir/name` and records its size and checksum.
pub(crate) fn write_file(dir: &Path, name: &str, data: &[u8], files: &mut BTreeMap<String, FileEntry>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, data).map_err(|e| Error::io(&path, e))?;
    files.insert(
        name.to_owned(),
        FileEntry {
            bytes: data.len() as u64,
            sha256: sha256_hex(data),
        },
    );
    Ok(())
}

/// Reads `dir/name` and verifies it against the manifest entry.
pub(crate) fn read_file(dir: &Path, name: &str, files: &BTreeMap<String, FileEntry>) -> Result<Vec<u8>> {
    let entry = files
        .get(name)
        .ok_or_else(|| Error::corrupt(name, "not listed in manifest"))?;
    let path = dir.join(name);
    let data = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
    if data.len() as u64 != entry.bytes {
        return Err(Error::corrupt(
            name,
            format!("expected {} bytes, found {}", entry.bytes, data.len()),
        ));
    }
    if sha256_hex(&data) != entry.sha256 {
        return Err(Error::corrupt(name, "checksum mismatch"));
    }
    Ok(data)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("manifest serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    serde_json::from_str(&text).map_err(|e| Error::corrupt(name, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoder_reports_truncation() {
        let mut enc = Encoder::default();
        enc.u32(7);
        enc.str("héllo");
        let buf = enc.into_inner();
        let mut dec = Decoder::new("x.bin", &buf);
        assert_eq!(dec.u32().unwrap(), 7);
        assert_eq!(dec.str().unwrap(), "héllo");
        dec.finish().unwrap();

        let mut short = Decoder::new("x.bin", &buf[..6]);
        short.u32().unwrap();
        let err = short.str().unwrap_err();
        assert!(err.to_string().contains("x.bin"), "{err}");
    }
}
