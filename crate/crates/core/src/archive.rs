//! Single-file weight archive.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "DQBW"            4 bytes magic
//! version = 1       u32
//! header_len        u64
//! header            UTF-8 JSON: { name: { "shape": [..], "dtype": "f32le", "offset": bytes }, .. }
//! payload           packed f32le values; offsets are relative to its start
//! ```
//!
//! Header keys are written in sorted order and payload offsets follow
//! insertion order, so save -> load -> save reproduces the file byte for byte.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"DQBW";
pub const VERSION: u32 = 1;
pub const DTYPE_F32LE: &str = "f32le";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    pub shape: Vec<usize>,
    pub dtype: String,
    /// Byte offset into the payload.
    pub offset: u64,
}

impl TensorEntry {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightArchive {
    entries: BTreeMap<String, TensorEntry>,
    payload: Vec<f32>,
}

impl WeightArchive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a tensor to the payload.
    pub fn insert(&mut self, name: &str, shape: Vec<usize>, data: &[f32]) -> Result<()> {
        if self.entries.contains_key(name) {
            return Err(Error::Format(format!("duplicate tensor name {name:?}")));
        }
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::Format(format!("tensor {name:?}: {} values for shape {shape:?}", data.len())));
        }
        let offset = (self.payload.len() * 4) as u64;
        self.payload.extend_from_slice(data);
        self.entries.insert(name.to_owned(), TensorEntry { shape, dtype: DTYPE_F32LE.to_owned(), offset });
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<(&[usize], &[f32])> {
        let e = self.entries.get(name)?;
        let start = (e.offset / 4) as usize;
        Some((&e.shape, &self.payload[start..start + e.numel()]))
    }

    pub fn entries(&self) -> &BTreeMap<String, TensorEntry> {
        &self.entries
    }

    pub fn payload(&self) -> &[f32] {
        &self.payload
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Checks that every `(name, shape)` is present with exactly that shape.
    /// The error lists each offending name.
    pub fn validate<'a>(&self, required: impl IntoIterator<Item = (&'a str, &'a [usize])>) -> Result<()> {
        let mut bad = Vec::new();
        for (name, shape) in required {
            match self.entries.get(name) {
                None => bad.push(format!("{name} (missing)")),
                Some(e) if e.shape != shape => bad.push(format!("{name} (shape {:?}, expected {shape:?})", e.shape)),
                Some(_) => {}
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(bad))
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&self.entries).expect("header serializes");
        let mut out = Vec::with_capacity(16 + header.len() + self.payload.len() * 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for v in &self.payload {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 16 || &bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic: not a DQBW weight archive".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(Error::Format(format!("unsupported archive version {version}")));
        }
        let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
        let header_end = 16u64
            .checked_add(header_len)
            .filter(|&end| end <= bytes.len() as u64)
            .ok_or_else(|| Error::Format(format!("header length {header_len} exceeds file size")))?
            as usize;
        let entries: BTreeMap<String, TensorEntry> = serde_json::from_slice(&bytes[16..header_end])
            .map_err(|e| Error::Format(format!("archive header: {e}")))?;
        let raw = &bytes[header_end..];
        if raw.len() % 4 != 0 {
            return Err(Error::Format(format!("payload length {} is not a multiple of 4", raw.len())));
        }

        let mut spans: Vec<(u64, u64, &str)> = Vec::with_capacity(entries.len());
        for (name, e) in &entries {
            if e.dtype != DTYPE_F32LE {
                return Err(Error::Format(format!("tensor {name}: unsupported dtype {:?}", e.dtype)));
            }
            if e.offset % 4 != 0 {
                return Err(Error::Format(format!("tensor {name}: offset {} is not 4-byte aligned", e.offset)));
            }
            let end = e.offset.checked_add(e.numel() as u64 * 4);
            match end {
                Some(end) if end <= raw.len() as u64 => spans.push((e.offset, end, name)),
                _ => {
                    return Err(Error::Format(format!(
                        "tensor {name}: offset {} + {} bytes out of bounds of the {}-byte payload",
                        e.offset,
                        e.numel() * 4,
                        raw.len()
                    )))
                }
            }
        }
        spans.sort_unstable();
        for pair in spans.windows(2) {
            if pair[0].1 > pair[1].0 {
                return Err(Error::Format(format!("tensors {} and {} overlap", pair[0].2, pair[1].2)));
            }
        }

        let payload = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
        Ok(Self { entries, payload })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> WeightArchive {
        let mut a = WeightArchive::new();
        a.insert("b.kernel", vec![2, 1, 1, 1], &[1.5, -2.0]).unwrap();
        a.insert("a.bias", vec![3], &[0.0, f32::MIN_POSITIVE, -0.0]).unwrap();
        a
    }

    #[test]
    fn byte_layout() {
        let bytes = sample().to_bytes();
        assert_eq!(&bytes[..4], b"DQBW");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        let hl = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let header: serde_json::Value = serde_json::from_slice(&bytes[16..16 + hl]).unwrap();
        assert_eq!(header["a.bias"]["offset"], 8);
        assert_eq!(header["b.kernel"]["dtype"], "f32le");
        assert_eq!(bytes.len(), 16 + hl + 5 * 4);
        assert_eq!(&bytes[16 + hl..16 + hl + 4], &1.5f32.to_le_bytes());
    }

    #[test]
    fn round_trip_is_bitwise() {
        let a = sample();
        let b = WeightArchive::from_bytes(&a.to_bytes()).unwrap();
        assert_eq!(b.to_bytes(), a.to_bytes());
        assert_eq!(b.get("a.bias").unwrap().1[2].to_bits(), (-0.0f32).to_bits());
    }

    #[test]
    fn truncated_payload() {
        let mut bytes = sample().to_bytes();
        bytes.truncate(bytes.len() - 4);
        let err = WeightArchive::from_bytes(&bytes).unwrap_err();
        assert!(matches!(err, Error::Format(ref m) if m.contains("out of bounds")), "{err}");
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = sample().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(WeightArchive::from_bytes(&bytes), Err(Error::Format(_))));
        let mut bytes = sample().to_bytes();
        bytes[4] = 2;
        assert!(matches!(WeightArchive::from_bytes(&bytes), Err(Error::Format(ref m)) if m.contains("version")));
    }

    #[test]
    fn validation_names_offenders() {
        let a = sample();
        let req: Vec<(&str, &[usize])> = vec![("a.bias", &[3]), ("b.kernel", &[2, 1, 3, 3]), ("c.bias", &[1])];
        match a.validate(req) {
            Err(Error::Validation(names)) => {
                assert_eq!(names.len(), 2);
                assert!(names[0].starts_with("b.kernel"));
                assert!(names[1].starts_with("c.bias"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
