//! IDX (MNIST) file parsing.

use std::fs;
use std::path::Path;

use crate::encoding::ImageSample;
use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

/// Images of one IDX file, flattened row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSet {
    pub rows: usize,
    pub cols: usize,
    pub images: Vec<Vec<u8>>,
}

fn be_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::format(offset as u64, "file truncated inside the header"))
}

fn check_magic(bytes: &[u8], expected: u32) -> Result<()> {
    let magic = be_u32(bytes, 0)?;
    if magic != expected {
        return Err(Error::format(
            0,
            format!("magic number {magic:#010x}, expected {expected:#010x}"),
        ));
    }
    Ok(())
}

fn check_body(bytes: &[u8], header: usize, body: usize) -> Result<()> {
    let expected = header + body;
    if bytes.len() < expected {
        return Err(Error::format(
            bytes.len() as u64,
            format!("file truncated: {} bytes, header announces {expected}", bytes.len()),
        ));
    }
    if bytes.len() > expected {
        return Err(Error::format(
            expected as u64,
            format!("{} trailing bytes after the announced data", bytes.len() - expected),
        ));
    }
    Ok(())
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<ImageSet> {
    check_magic(bytes, IMAGE_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    let rows = be_u32(bytes, 8)? as usize;
    let cols = be_u32(bytes, 12)? as usize;
    let size = rows
        .checked_mul(cols)
        .filter(|s| s.checked_mul(count).is_some())
        .ok_or_else(|| Error::format(4, "image dimensions overflow"))?;
    check_body(bytes, 16, size * count)?;
    let images = if size == 0 {
        vec![Vec::new(); count]
    } else {
        bytes[16..].chunks_exact(size).map(<[u8]>::to_vec).collect()
    };
    Ok(ImageSet { rows, cols, images })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    check_magic(bytes, LABEL_MAGIC)?;
    let count = be_u32(bytes, 4)? as usize;
    check_body(bytes, 8, count)?;
    let labels = bytes[8..].to_vec();
    if let Some(pos) = labels.iter().position(|&l| l > 9) {
        return Err(Error::format(
            (8 + pos) as u64,
            format!("label {} outside 0..=9", labels[pos]),
        ));
    }
    Ok(labels)
}

pub fn load_idx_images(path: &Path) -> Result<ImageSet> {
    parse_idx_images(&fs::read(path)?)
}

pub fn load_idx_labels(path: &Path) -> Result<Vec<u8>> {
    parse_idx_labels(&fs::read(path)?)
}

/// Pairs images with labels.
pub fn pair(images: ImageSet, labels: Vec<u8>) -> Result<Vec<ImageSample>> {
    if images.images.len() != labels.len() {
        return Err(Error::Consistency(format!(
            "{} images but {} labels",
            images.images.len(),
            labels.len()
        )));
    }
    Ok(images
        .images
        .into_iter()
        .zip(labels)
        .map(|(p, l)| ImageSample::new(p, l))
        .collect())
}

/// Serializes images in IDX form.
pub fn encode_idx_images(rows: usize, cols: usize, images: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + rows * cols * images.len());
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(rows as u32).to_be_bytes());
    out.extend_from_slice(&(cols as u32).to_be_bytes());
    for img in images {
        assert_eq!(img.len(), rows * cols);
        out.extend_from_slice(img);
    }
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
