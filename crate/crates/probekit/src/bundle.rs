//! A small binary container for named weight matrices.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "SBPW"  version byte 0x01  u32 matrix count
//! per matrix: u16 name length, name (UTF-8), u32 rows, u32 cols,
//!             rows * cols f32 values in row-major order
//! optional metadata section (only present when nonempty):
//!             u32 pair count, per pair u16 key length + key,
//!             u16 value length + value
//! ```
//!
//! An empty bundle is exactly 9 bytes; a bundle holding one 1x1 matrix
//! named "W" is 24. Values are stored as f32, so writing quantizes f64
//! weights to f32 precision. Matrix names are unique within a bundle
//! and order is preserved byte-for-byte.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const MAGIC: &[u8; 4] = b"SBPW";
const VERSION: u8 = 0x01;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightsBundle {
    matrices: Vec<(String, Matrix)>,
    metadata: Vec<(String, String)>,
}

impl WeightsBundle {
    pub fn new() -> Self {
        WeightsBundle::default()
    }

    /// Appends a named matrix. Names are nonempty, unique, and at most
    /// 65535 bytes of UTF-8.
    pub fn push(&mut self, name: impl Into<String>, matrix: Matrix) -> Result<()> {
        let name = name.into();
        if name.is_empty() || name.len() > u16::MAX as usize {
            return Err(Error::invalid(format!(
                "matrix name must be 1..=65535 bytes, got {}",
                name.len()
            )));
        }
        if self.matrices.iter().any(|(n, _)| *n == name) {
            return Err(Error::DuplicateName(name));
        }
        self.matrices.push((name, matrix));
        Ok(())
    }

    pub fn matrices(&self) -> &[(String, Matrix)] {
        &self.matrices
    }

    /// Mutable access to matrix values with names fixed in place.
    pub fn matrices_mut(&mut self) -> impl Iterator<Item = (&str, &mut Matrix)> {
        self.matrices.iter_mut().map(|(n, m)| (n.as_str(), m))
    }

    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.matrices
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| m)
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn metadata(&self) -> &[(String, String)] {
        &self.metadata
    }

    /// Sets a metadata pair, replacing an existing key in place.
    pub fn set_metadata(&mut self, key: impl Into<String>, value: impl Into<String>) -> Result<()> {
        let key = key.into();
        let value = value.into();
        if key.is_empty() || key.len() > u16::MAX as usize || value.len() > u16::MAX as usize {
            return Err(Error::invalid(
                "metadata keys need 1..=65535 bytes, values at most 65535",
            ));
        }
        if let Some(slot) = self.metadata.iter_mut().find(|(k, _)| *k == key) {
            slot.1 = value;
        } else {
            self.metadata.push((key, value));
        }
        Ok(())
    }

    /// Serializes to the container layout. Every value must fit f32
    /// finitely.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(self.matrices.len() as u32).to_le_bytes());
        for (name, matrix) in &self.matrices {
            matrix.validate_finite(name)?;
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(matrix.rows() as u32).to_le_bytes());
            out.extend_from_slice(&(matrix.cols() as u32).to_le_bytes());
            for (idx, &v) in matrix.values().iter().enumerate() {
                let narrowed = v as f32;
                if !narrowed.is_finite() {
                    return Err(Error::NonFinite {
                        context: format!(
                            "{name}[{}, {}] does not fit f32",
                            idx / matrix.cols(),
                            idx % matrix.cols()
                        ),
                        value: v,
                    });
                }
                out.extend_from_slice(&narrowed.to_le_bytes());
            }
        }
        if !self.metadata.is_empty() {
            out.extend_from_slice(&(self.metadata.len() as u32).to_le_bytes());
            for (key, value) in &self.metadata {
                out.extend_from_slice(&(key.len() as u16).to_le_bytes());
                out.extend_from_slice(key.as_bytes());
                out.extend_from_slice(&(value.len() as u16).to_le_bytes());
                out.extend_from_slice(value.as_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        let magic = r.take(4)?;
        if magic != MAGIC {
            return Err(Error::format(format!(
                "bad bundle magic {magic:?}, expected {MAGIC:?}"
            )));
        }
        let version = r.take(1)?[0];
        if version != VERSION {
            return Err(Error::format(format!(
                "unsupported bundle version {version}, expected {VERSION}"
            )));
        }
        let count = r.u32_le()? as usize;
        let mut bundle = WeightsBundle::new();
        for _ in 0..count {
            let name_len = r.u16_le()? as usize;
            let name_bytes = r.take(name_len)?;
            let name = std::str::from_utf8(name_bytes)
                .map_err(|_| Error::format("matrix name is not valid UTF-8"))?
                .to_string();
            let rows = r.u32_le()? as usize;
            let cols = r.u32_le()? as usize;
            if rows == 0 || cols == 0 {
                return Err(Error::format(format!(
                    "matrix {name:?} has degenerate shape {rows}x{cols}"
                )));
            }
            let mut values = Vec::with_capacity(rows * cols);
            for idx in 0..rows * cols {
                let b = r.take(4)?;
                let v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        context: format!("{name}[{}, {}]", idx / cols, idx % cols),
                        value: v as f64,
                    });
                }
                values.push(v as f64);
            }
            bundle.push(name, Matrix::from_vec(rows, cols, values))?;
        }
        if r.remaining() > 0 {
            let pairs = r.u32_le()? as usize;
            for _ in 0..pairs {
                let key_len = r.u16_le()? as usize;
                let key = std::str::from_utf8(r.take(key_len)?)
                    .map_err(|_| Error::format("metadata key is not valid UTF-8"))?
                    .to_string();
                let value_len = r.u16_le()? as usize;
                let value = std::str::from_utf8(r.take(value_len)?)
                    .map_err(|_| Error::format("metadata value is not valid UTF-8"))?
                    .to_string();
                if key.is_empty() || bundle.metadata.iter().any(|(k, _)| *k == key) {
                    return Err(Error::format(format!(
                        "metadata key {key:?} is empty or repeated"
                    )));
                }
                bundle.metadata.push((key, value));
            }
        }
        if r.remaining() != 0 {
            return Err(Error::format(format!(
                "{} trailing bytes after bundle payload",
                r.remaining()
            )));
        }
        Ok(bundle)
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::Truncated {
                offset: self.pos,
                needed: n - self.remaining(),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn u16_le(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32_le(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn write_bundle(bundle: &WeightsBundle, path: &Path) -> Result<()> {
    let bytes = bundle.to_bytes()?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_bundle(path: &Path) -> Result<WeightsBundle> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    WeightsBundle::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_bundle_is_exactly_nine_bytes() {
        let bytes = WeightsBundle::new().to_bytes().unwrap();
        assert_eq!(bytes, vec![0x53, 0x42, 0x50, 0x57, 0x01, 0, 0, 0, 0]);
        let parsed = WeightsBundle::from_bytes(&bytes).unwrap();
        assert!(parsed.is_empty());
        assert!(parsed.metadata().is_empty());
    }

    #[test]
    fn single_unit_matrix_layout_is_pinned() {
        let mut bundle = WeightsBundle::new();
        bundle.push("W", Matrix::from_vec(1, 1, vec![1.5])).unwrap();
        let bytes = bundle.to_bytes().unwrap();
        assert_eq!(bytes.len(), 24);
        let expected = [
            0x53, 0x42, 0x50, 0x57, // magic
            0x01, // version
            1, 0, 0, 0, // matrix count
            1, 0,    // name length
            b'W', // name
            1, 0, 0, 0, // rows
            1, 0, 0, 0, // cols
            0x00, 0x00, 0xC0, 0x3F, // 1.5f32 little-endian
        ];
        assert_eq!(bytes, expected);
    }

    #[test]
    fn round_trip_preserves_names_order_and_values() {
        let mut bundle = WeightsBundle::new();
        bundle
            .push(
                "encoder",
                Matrix::from_rows(&[vec![1.0, -2.5], vec![0.0, 0.5]]),
            )
            .unwrap();
        bundle
            .push("decoder", Matrix::from_rows(&[vec![3.0, 4.0, 5.0]]))
            .unwrap();
        let parsed = WeightsBundle::from_bytes(&bundle.to_bytes().unwrap()).unwrap();
        assert_eq!(parsed, bundle);
        assert_eq!(parsed.matrices()[0].0, "encoder");
        assert_eq!(parsed.matrices()[1].0, "decoder");
        assert_eq!(parsed.get("decoder").unwrap().shape(), (1, 3));
    }

    #[test]
    fn values_quantize_to_f32_on_write() {
        let mut bundle = WeightsBundle::new();
        bundle.push("W", Matrix::from_vec(1, 1, vec![0.1])).unwrap();
        let parsed = WeightsBundle::from_bytes(&bundle.to_bytes().unwrap()).unwrap();
        assert_eq!(parsed.get("W").unwrap().get(0, 0), 0.1f32 as f64);
    }

    #[test]
    fn metadata_round_trips_and_stays_optional() {
        let mut bundle = WeightsBundle::new();
        bundle.push("W", Matrix::from_vec(1, 1, vec![1.0])).unwrap();
        let plain_len = bundle.to_bytes().unwrap().len();

        bundle.set_metadata("hidden_dim", "64").unwrap();
        bundle.set_metadata("seed", "7").unwrap();
        let bytes = bundle.to_bytes().unwrap();
        assert!(bytes.len() > plain_len);
        let parsed = WeightsBundle::from_bytes(&bytes).unwrap();
        assert_eq!(
            parsed.metadata(),
            &[
                ("hidden_dim".to_string(), "64".to_string()),
                ("seed".to_string(), "7".to_string())
            ]
        );

        // Replacing a key keeps its position.
        let mut updated = parsed.clone();
        updated.set_metadata("hidden_dim", "128").unwrap();
        assert_eq!(
            updated.metadata()[0],
            ("hidden_dim".to_string(), "128".to_string())
        );
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let mut bundle = WeightsBundle::new();
        bundle.push("W", Matrix::zeros(1, 1)).unwrap();
        assert!(matches!(
            bundle.push("W", Matrix::zeros(2, 2)),
            Err(Error::DuplicateName(_))
        ));
    }

    #[test]
    fn corrupt_headers_are_rejected() {
        let mut bundle = WeightsBundle::new();
        bundle.push("W", Matrix::zeros(1, 1)).unwrap();
        let good = bundle.to_bytes().unwrap();

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            WeightsBundle::from_bytes(&bad_magic),
            Err(Error::Format(_))
        ));

        let mut bad_version = good.clone();
        bad_version[4] = 0x02;
        assert!(matches!(
            WeightsBundle::from_bytes(&bad_version),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn truncation_is_detected_at_any_cut() {
        let mut without_meta = WeightsBundle::new();
        without_meta
            .push("W", Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]))
            .unwrap();
        let matrices_end = without_meta.to_bytes().unwrap().len();

        let mut bundle = without_meta.clone();
        bundle.set_metadata("k", "v").unwrap();
        let good = bundle.to_bytes().unwrap();
        for cut in 1..good.len() {
            let parsed = WeightsBundle::from_bytes(&good[..cut]);
            if cut == matrices_end {
                // Cutting exactly after the matrices drops the optional
                // metadata section, which is a valid smaller bundle.
                assert_eq!(parsed.unwrap(), without_meta);
            } else {
                assert!(parsed.is_err(), "cut at {cut} parsed");
            }
        }
    }

    #[test]
    fn trailing_garbage_is_rejected() {
        let mut bundle = WeightsBundle::new();
        bundle.push("W", Matrix::zeros(1, 1)).unwrap();
        let mut bytes = bundle.to_bytes().unwrap();
        bytes.push(0xAA);
        // One stray byte after the matrices reads as a truncated
        // metadata section; more garbage after valid metadata also fails.
        assert!(WeightsBundle::from_bytes(&bytes).is_err());

        bundle.set_metadata("k", "v").unwrap();
        let mut bytes = bundle.to_bytes().unwrap();
        bytes.extend_from_slice(&[1, 2, 3]);
        assert!(WeightsBundle::from_bytes(&bytes).is_err());
    }

    #[test]
    fn non_finite_values_are_rejected_both_ways() {
        let mut bundle = WeightsBundle::new();
        bundle
            .push("W", Matrix::from_vec(1, 1, vec![f64::NAN]))
            .unwrap();
        assert!(matches!(bundle.to_bytes(), Err(Error::NonFinite { .. })));

        // f64::MAX overflows f32 to infinity.
        let mut bundle = WeightsBundle::new();
        bundle
            .push("W", Matrix::from_vec(1, 1, vec![f64::MAX]))
            .unwrap();
        assert!(matches!(bundle.to_bytes(), Err(Error::NonFinite { .. })));

        // Hand-crafted payload holding an f32 infinity.
        let mut bundle = WeightsBundle::new();
        bundle.push("W", Matrix::from_vec(1, 1, vec![1.0])).unwrap();
        let mut bytes = bundle.to_bytes().unwrap();
        let n = bytes.len();
        bytes[n - 4..].copy_from_slice(&f32::INFINITY.to_le_bytes());
        assert!(matches!(
            WeightsBundle::from_bytes(&bytes),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn degenerate_shapes_are_rejected_on_read() {
        let mut bundle = WeightsBundle::new();
        bundle.push("W", Matrix::zeros(1, 1)).unwrap();
        let mut bytes = bundle.to_bytes().unwrap();
        // rows field sits right after the 2-byte name length and name.
        let rows_offset = 4 + 1 + 4 + 2 + 1;
        bytes[rows_offset..rows_offset + 4].copy_from_slice(&0u32.to_le_bytes());
        let shortened = &bytes[..bytes.len() - 4];
        assert!(WeightsBundle::from_bytes(shortened).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("weights.sbpw");
        let mut bundle = WeightsBundle::new();
        bundle
            .push("W1", Matrix::from_rows(&[vec![1.0, -1.0]]))
            .unwrap();
        bundle.set_metadata("source", "test").unwrap();
        write_bundle(&bundle, &path).unwrap();
        assert_eq!(read_bundle(&path).unwrap(), bundle);
        assert!(matches!(
            read_bundle(&dir.path().join("missing.sbpw")),
            Err(Error::Io { .. })
        ));
    }
}
