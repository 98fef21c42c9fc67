//! IDX files: big-endian header `00 00 08 <ndims>`, `ndims` u32 sizes, then
//! unsigned bytes.

use std::path::Path;

use sgm_core::ImageSet;

use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IdxError {
    #[error("bad magic number 0x{found:08x} (expected 0x{expected:08x})")]
    BadMagic { expected: u32, found: u32 },
    #[error("truncated IDX stream: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{0} unexpected bytes after the IDX payload")]
    TrailingBytes(usize),
    #[error("label {value} at index {index} is not a digit")]
    InvalidLabel { index: usize, value: u8 },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
}

/// Decoded image file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn header(bytes: &[u8], magic: u32) -> std::result::Result<Vec<usize>, IdxError> {
    let ndims = (magic & 0xff) as usize;
    let head = 4 + 4 * ndims;
    if bytes.len() < 4 {
        return Err(IdxError::Truncated { needed: head, available: bytes.len() });
    }
    let found = u32::from_be_bytes(bytes[..4].try_into().unwrap());
    if found != magic {
        return Err(IdxError::BadMagic { expected: magic, found });
    }
    if bytes.len() < head {
        return Err(IdxError::Truncated { needed: head, available: bytes.len() });
    }
    let dims = bytes[4..head]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes(c.try_into().unwrap()) as usize)
        .collect();
    Ok(dims)
}

fn payload(bytes: &[u8], start: usize, len: usize) -> std::result::Result<&[u8], IdxError> {
    let needed = start + len;
    if bytes.len() < needed {
        return Err(IdxError::Truncated { needed, available: bytes.len() });
    }
    if bytes.len() > needed {
        return Err(IdxError::TrailingBytes(bytes.len() - needed));
    }
    Ok(&bytes[start..])
}

pub fn parse_images(bytes: &[u8]) -> std::result::Result<IdxImages, IdxError> {
    let dims = header(bytes, IMAGES_MAGIC)?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    if rows == 0 || cols == 0 {
        return Err(IdxError::DimensionMismatch(format!("empty image size {rows}x{cols}")));
    }
    let pixels = payload(bytes, 16, count * rows * cols)?.to_vec();
    Ok(IdxImages { count, rows, cols, pixels })
}

/// [`parse_images`] requiring a fixed image size.
pub fn parse_images_with_shape(
    bytes: &[u8],
    rows: usize,
    cols: usize,
) -> std::result::Result<IdxImages, IdxError> {
    let dims = header(bytes, IMAGES_MAGIC)?;
    if (dims[1], dims[2]) != (rows, cols) {
        return Err(IdxError::DimensionMismatch(format!(
            "images are {}x{}, expected {rows}x{cols}",
            dims[1], dims[2]
        )));
    }
    parse_images(bytes)
}

pub fn parse_labels(bytes: &[u8]) -> std::result::Result<Vec<u8>, IdxError> {
    let dims = header(bytes, LABELS_MAGIC)?;
    let labels = payload(bytes, 8, dims[0])?.to_vec();
    if let Some((index, &value)) = labels.iter().enumerate().find(|(_, &v)| v > 9) {
        return Err(IdxError::InvalidLabel { index, value });
    }
    Ok(labels)
}

pub fn encode_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [IMAGES_MAGIC, images.count as u32, images.rows as u32, images.cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Pairs an image file with its label file.
pub fn image_set(images: IdxImages, labels: Vec<u8>) -> std::result::Result<ImageSet, IdxError> {
    if images.count != labels.len() {
        return Err(IdxError::CountMismatch { images: images.count, labels: labels.len() });
    }
    Ok(ImageSet::new(images.rows, images.cols, images.pixels, labels)
        .expect("sizes and labels were checked while parsing"))
}

/// Reads a 28x28 image file and its labels.
pub fn load_image_set(images: &Path, labels: &Path) -> Result<ImageSet> {
    let read = |p: &Path| std::fs::read(p).map_err(|e| Error::io(p, e));
    let imgs = parse_images_with_shape(&read(images)?, 28, 28).map_err(|e| Error::idx(images, e))?;
    let labs = parse_labels(&read(labels)?).map_err(|e| Error::idx(labels, e))?;
    image_set(imgs, labs).map_err(|e| Error::idx(labels, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_stream_is_truncated() {
        assert!(matches!(parse_images(&[]), Err(IdxError::Truncated { .. })));
        assert!(matches!(parse_labels(&[]), Err(IdxError::Truncated { .. })));
    }

    #[test]
    fn single_zero_image() {
        let mut bytes = vec![0, 0, 8, 3, 0, 0, 0, 1, 0, 0, 0, 28, 0, 0, 0, 28];
        bytes.extend(std::iter::repeat_n(0u8, 784));
        let img = parse_images(&bytes).unwrap();
        assert_eq!((img.count, img.rows, img.cols), (1, 28, 28));
        assert!(img.pixels.iter().all(|&p| p == 0));
    }

    #[test]
    fn label_errors() {
        let mut bytes = encode_labels(&[1, 2, 3]);
        assert_eq!(parse_labels(&bytes).unwrap(), vec![1, 2, 3]);
        bytes.push(0);
        assert_eq!(parse_labels(&bytes), Err(IdxError::TrailingBytes(1)));
        let bad = encode_labels(&[1, 12]);
        assert_eq!(parse_labels(&bad), Err(IdxError::InvalidLabel { index: 1, value: 12 }));
    }
}
