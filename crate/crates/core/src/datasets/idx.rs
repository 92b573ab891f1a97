//! IDX image and label files.

use std::path::Path;

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Greyscale image in row-major order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len()).ok_or(Error::Truncated {
            needed: self.pos.saturating_add(len),
            available: self.bytes.len(),
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let found = self.u32()?;
        if found != expected {
            return Err(Error::BadMagic { found, expected });
        }
        Ok(())
    }
}

pub fn parse_images(bytes: &[u8]) -> Result<Vec<Image>> {
    let mut r = Reader { bytes, pos: 0 };
    r.magic(IMAGE_MAGIC)?;
    let count = r.u32()? as usize;
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let size = rows * cols;
    let payload = r.take(count * size)?;
    Ok(payload.chunks(size.max(1)).take(count).map(|p| Image { rows, cols, pixels: p.to_vec() }).collect())
}

pub fn parse_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut r = Reader { bytes, pos: 0 };
    r.magic(LABEL_MAGIC)?;
    let count = r.u32()? as usize;
    Ok(r.take(count)?.to_vec())
}

/// Reads paired image and label files.
pub fn load_idx(images: &Path, labels: &Path) -> Result<Vec<(Image, u8)>> {
    let images = parse_images(&std::fs::read(images)?)?;
    let labels = parse_labels(&std::fs::read(labels)?)?;
    if images.len() != labels.len() {
        return Err(Error::CountMismatch { images: images.len(), labels: labels.len() });
    }
    Ok(images.into_iter().zip(labels).collect())
}

/// Serialises images in IDX format.
pub fn encode_images(images: &[Image]) -> Vec<u8> {
    let (rows, cols) = images.first().map_or((0, 0), |i| (i.rows, i.cols));
    let mut out = Vec::new();
    for v in [IMAGE_MAGIC, images.len() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for img in images {
        out.extend_from_slice(&img.pixels);
    }
    out
}

/// Serialises labels in IDX format.
pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
