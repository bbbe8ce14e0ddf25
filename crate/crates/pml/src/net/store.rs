//! Named-tensor container for trained parameters.
//!
//! File layout, all integers little-endian:
//!   magic "PMLW" | version u32 | descriptor len u32 | descriptor (UTF-8 JSON)
//!   | tensor count u32 | per tensor: name len u32, name, rank u32,
//!   dims (u32 each), values (f32 each, row-major)
//!
//! Every stored value must be finite; load and save both enforce it so a
//! diverged checkpoint can never round-trip silently.

use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: [u8; 4] = *b"PMLW";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamEntry {
    pub name: String,
    pub dims: Vec<usize>,
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore {
    /// Free-form JSON describing the network the tensors belong to.
    pub descriptor: String,
    entries: Vec<ParamEntry>,
}

impl ParamStore {
    pub fn new(descriptor: impl Into<String>) -> Self {
        ParamStore {
            descriptor: descriptor.into(),
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, dims: &[usize], values: Vec<f32>) -> Result<()> {
        let want: usize = dims.iter().product();
        if want != values.len() {
            return Err(Error::ParamStore(format!(
                "tensor {name:?}: dims {dims:?} want {want} values, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::ParamStore(format!(
                "tensor {name:?} contains non-finite value {bad}"
            )));
        }
        if self.entries.iter().any(|e| e.name == name) {
            return Err(Error::ParamStore(format!("duplicate tensor name {name:?}")));
        }
        self.entries.push(ParamEntry {
            name: name.to_string(),
            dims: dims.to_vec(),
            values,
        });
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&ParamEntry> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::ParamStore(format!("missing tensor {name:?}")))
    }

    pub fn entries(&self) -> &[ParamEntry] {
        &self.entries
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.descriptor.len() as u32).to_le_bytes());
        out.extend_from_slice(self.descriptor.as_bytes());
        out.extend_from_slice(&(self.entries.len() as u32).to_le_bytes());
        for e in &self.entries {
            out.extend_from_slice(&(e.name.len() as u32).to_le_bytes());
            out.extend_from_slice(e.name.as_bytes());
            out.extend_from_slice(&(e.dims.len() as u32).to_le_bytes());
            for d in &e.dims {
                out.extend_from_slice(&(*d as u32).to_le_bytes());
            }
            for v in &e.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4)?;
        if magic != MAGIC {
            return Err(Error::BadMagic {
                expected: MAGIC,
                found: [magic[0], magic[1], magic[2], magic[3]],
            });
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let desc_len = r.u32()? as usize;
        let descriptor = String::from_utf8(r.take(desc_len)?.to_vec())
            .map_err(|_| Error::CorruptFile("descriptor is not valid UTF-8".into()))?;
        let count = r.u32()? as usize;
        let mut store = ParamStore::new(descriptor);
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec())
                .map_err(|_| Error::CorruptFile("tensor name is not valid UTF-8".into()))?;
            let rank = r.u32()? as usize;
            let mut dims = Vec::with_capacity(rank);
            for _ in 0..rank {
                dims.push(r.u32()? as usize);
            }
            let n: usize = dims.iter().product();
            let raw = r.take(n * 4)?;
            let values: Vec<f32> = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            store.push(&name, &dims, values).map_err(|e| match e {
                Error::ParamStore(msg) => Error::CorruptFile(msg),
                other => other,
            })?;
        }
        if r.pos != bytes.len() {
            return Err(Error::CorruptFile(format!(
                "{} trailing bytes after the last tensor",
                bytes.len() - r.pos
            )));
        }
        Ok(store)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    /// FNV-1a over the serialized bytes; stable fingerprint for
    /// reproducibility checks.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in self.to_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated {
                wanted: self.pos + n - self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_store() -> ParamStore {
        let mut s = ParamStore::new(r#"{"kind":"toy"}"#);
        s.push("enc.w", &[2, 3], vec![0.5, -1.25, 3.0, 0.0, 2.5, -0.125])
            .unwrap();
        s.push("enc.b", &[2], vec![0.75, -0.5]).unwrap();
        s
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let s = sample_store();
        let bytes = s.to_bytes();
        let back = ParamStore::from_bytes(&bytes).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.pmlw");
        let s = sample_store();
        s.save(&path).unwrap();
        let back = ParamStore::load(&path).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.checksum(), s.checksum());
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut bytes = sample_store().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(
            ParamStore::from_bytes(&bytes),
            Err(Error::BadMagic { .. })
        ));
    }

    #[test]
    fn unsupported_version_is_rejected() {
        let mut bytes = sample_store().to_bytes();
        bytes[4] = 99;
        assert!(matches!(
            ParamStore::from_bytes(&bytes),
            Err(Error::UnsupportedVersion(99))
        ));
    }

    #[test]
    fn truncation_is_rejected_at_every_length() {
        let bytes = sample_store().to_bytes();
        for cut in 0..bytes.len() {
            let err = ParamStore::from_bytes(&bytes[..cut]).unwrap_err();
            assert!(
                matches!(err, Error::Truncated { .. }),
                "cut {cut}: unexpected error {err:?}"
            );
        }
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        let mut bytes = sample_store().to_bytes();
        bytes.push(0);
        assert!(matches!(
            ParamStore::from_bytes(&bytes),
            Err(Error::CorruptFile(_))
        ));
    }

    #[test]
    fn non_finite_values_are_rejected_on_push_and_load() {
        let mut s = ParamStore::new("{}");
        assert!(s.push("w", &[1], vec![f32::NAN]).is_err());

        let mut ok = ParamStore::new("{}");
        ok.push("w", &[1], vec![1.0]).unwrap();
        let mut bytes = ok.to_bytes();
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&f32::INFINITY.to_le_bytes());
        assert!(matches!(
            ParamStore::from_bytes(&bytes),
            Err(Error::CorruptFile(_))
        ));
    }

    #[test]
    fn duplicate_and_missing_names_error() {
        let mut s = sample_store();
        assert!(s.push("enc.w", &[1], vec![0.0]).is_err());
        assert!(s.get("enc.w").is_ok());
        assert!(s.get("nope").is_err());
    }

    #[test]
    fn shape_value_count_mismatch_errors() {
        let mut s = ParamStore::new("{}");
        assert!(s.push("w", &[2, 2], vec![1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn checksum_changes_with_content() {
        let a = sample_store();
        let mut b = sample_store();
        b.push("extra", &[1], vec![9.0]).unwrap();
        assert_ne!(a.checksum(), b.checksum());
    }
}
