//! IDX container parsing and serialization.
//!
//! The format is big-endian: a four-byte magic (0x00000803 for image
//! tensors, 0x00000801 for label vectors), the item count, for images the
//! row and column counts, then the raw bytes. Inputs may arrive gzip
//! compressed; compression is detected by the 0x1f 0x8b prefix rather
//! than by file name.

use std::borrow::Cow;
use std::io::Read;

use crate::data::Image;
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Truncated {
                offset: self.pos,
                needed: n - (self.bytes.len() - self.pos),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32_be(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn finish(&self) -> Result<()> {
        let rest = self.bytes.len() - self.pos;
        if rest != 0 {
            return Err(Error::format(format!(
                "{rest} trailing bytes after IDX payload"
            )));
        }
        Ok(())
    }
}

/// Transparently inflates gzip input; passes plain bytes through.
pub fn decode_maybe_gzip(bytes: &[u8]) -> Result<Cow<'_, [u8]>> {
    if bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b {
        let mut out = Vec::new();
        flate2::read::GzDecoder::new(bytes)
            .read_to_end(&mut out)
            .map_err(|e| Error::format(format!("gzip decode failed: {e}")))?;
        Ok(Cow::Owned(out))
    } else {
        Ok(Cow::Borrowed(bytes))
    }
}

/// Parses an IDX image tensor into individual images.
pub fn parse_idx_images(bytes: &[u8]) -> Result<Vec<Image>> {
    let bytes = decode_maybe_gzip(bytes)?;
    let mut r = Reader::new(&bytes);
    let magic = r.u32_be()?;
    if magic != IMAGES_MAGIC {
        return Err(Error::format(format!(
            "bad IDX image magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"
        )));
    }
    let count = r.u32_be()? as usize;
    let rows = r.u32_be()? as usize;
    let cols = r.u32_be()? as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::format(format!(
            "IDX image dimensions {rows}x{cols} must be positive"
        )));
    }
    let mut images = Vec::with_capacity(count);
    for _ in 0..count {
        let pixels = r.take(rows * cols)?.to_vec();
        images.push(Image { rows, cols, pixels });
    }
    r.finish()?;
    Ok(images)
}

/// Parses an IDX label vector. Labels are validated to lie in `0..=9`.
pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let bytes = decode_maybe_gzip(bytes)?;
    let mut r = Reader::new(&bytes);
    let magic = r.u32_be()?;
    if magic != LABELS_MAGIC {
        return Err(Error::format(format!(
            "bad IDX label magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"
        )));
    }
    let count = r.u32_be()? as usize;
    let labels = r.take(count)?.to_vec();
    r.finish()?;
    for (index, &label) in labels.iter().enumerate() {
        if label > 9 {
            return Err(Error::LabelRange { index, label });
        }
    }
    Ok(labels)
}

/// Serializes images into the IDX tensor layout. All images must share
/// one shape.
pub fn serialize_idx_images(images: &[Image]) -> Vec<u8> {
    let (rows, cols) = images
        .first()
        .map(|im| (im.rows, im.cols))
        .unwrap_or((1, 1));
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    out.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(rows as u32).to_be_bytes());
    out.extend_from_slice(&(cols as u32).to_be_bytes());
    for im in images {
        assert_eq!((im.rows, im.cols), (rows, cols), "mixed image shapes");
        out.extend_from_slice(&im.pixels);
    }
    out
}

pub fn serialize_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
