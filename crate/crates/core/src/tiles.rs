//! Digit images and their three-tile modality construction.
//!
//! Each 28x28 image is reduced to 14x14 by 2x2 mean pooling. From the top
//! seven rows three 7x7 tiles are cut:
//!
//! | modality | columns |              |
//! |----------|---------|--------------|
//! | 0        | 3..=9   | upper center |
//! | 1        | 0..=6   | upper left   |
//! | 2        | 7..=13  | upper right  |
//!
//! The center tile overlaps four columns of the left tile and three of the
//! right one. Tiles are vectorized row-major and scaled to `[0, 1]`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{dim_err, Error, Result};
use crate::linalg::Matrix;

pub const IMAGE_SIDE: usize = 28;
pub const POOLED_SIDE: usize = 14;
pub const TILE_SIDE: usize = 7;
pub const TILE_DIM: usize = TILE_SIDE * TILE_SIDE;
/// First pooled column of the tile for modality 0, 1 and 2.
pub const TILE_COLUMNS: [usize; 3] = [3, 0, 7];

/// Grayscale images with digit labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageSet {
    rows: usize,
    cols: usize,
    /// Image-major, then row-major pixels.
    pixels: Vec<u8>,
    labels: Vec<u8>,
}

impl ImageSet {
    pub fn new(rows: usize, cols: usize, pixels: Vec<u8>, labels: Vec<u8>) -> Result<Self> {
        let expected = labels.len() * rows * cols;
        if pixels.len() != expected {
            return Err(dim_err(
                "ImageSet",
                format!(
                    "{} pixels for {} images of {rows}x{cols}",
                    pixels.len(),
                    labels.len()
                ),
            ));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 9) {
            return Err(Error::InvalidArgument(format!("label {bad} is not a digit")));
        }
        Ok(Self {
            rows,
            cols,
            pixels,
            labels,
        })
    }

    pub fn count(&self) -> usize {
        self.labels.len()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn image(&self, j: usize) -> &[u8] {
        let size = self.rows * self.cols;
        &self.pixels[j * size..(j + 1) * size]
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// The first `count` images.
    pub fn truncate(&mut self, count: usize) {
        let count = count.min(self.count());
        self.labels.truncate(count);
        self.pixels.truncate(count * self.rows * self.cols);
    }
}

/// The three tile modalities of an [`ImageSet`]; column `j` of every
/// modality comes from image `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct TiledModalities {
    modalities: [Matrix; 3],
    labels: Vec<u8>,
}

impl TiledModalities {
    /// Pre-built modalities; all must have one column per label.
    pub fn from_parts(modalities: [Matrix; 3], labels: Vec<u8>) -> Result<Self> {
        if let Some(i) = modalities.iter().position(|m| m.cols() != labels.len()) {
            return Err(dim_err(
                "TiledModalities",
                format!(
                    "modality {i} has {} samples for {} labels",
                    modalities[i].cols(),
                    labels.len()
                ),
            ));
        }
        Ok(Self { modalities, labels })
    }

    pub fn count(&self) -> usize {
        self.labels.len()
    }

    /// `49 x count` matrix of modality `i`.
    pub fn modality(&self, i: usize) -> &Matrix {
        &self.modalities[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }
}

/// 2x2 mean pooling of one 28x28 image, as `[0, 1]` values.
pub fn downsample(image: &[u8]) -> Result<[[f64; POOLED_SIDE]; POOLED_SIDE]> {
    if image.len() != IMAGE_SIDE * IMAGE_SIDE {
        return Err(dim_err(
            "downsample",
            format!("image has {} pixels, expected {}", image.len(), IMAGE_SIDE * IMAGE_SIDE),
        ));
    }
    let mut out = [[0.0; POOLED_SIDE]; POOLED_SIDE];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            let at = |dr: usize, dc: usize| image[(2 * r + dr) * IMAGE_SIDE + 2 * c + dc] as u32;
            let sum = at(0, 0) + at(0, 1) + at(1, 0) + at(1, 1);
            *v = sum as f64 / (4.0 * 255.0);
        }
    }
    Ok(out)
}

pub fn tile(images: &ImageSet) -> Result<TiledModalities> {
    if images.rows != IMAGE_SIDE || images.cols != IMAGE_SIDE {
        return Err(dim_err(
            "tile",
            format!(
                "images are {}x{}, expected {IMAGE_SIDE}x{IMAGE_SIDE}",
                images.rows, images.cols
            ),
        ));
    }
    let n = images.count();
    let mut modalities = [
        Matrix::zeros(TILE_DIM, n),
        Matrix::zeros(TILE_DIM, n),
        Matrix::zeros(TILE_DIM, n),
    ];
    for j in 0..n {
        let pooled = downsample(images.image(j))?;
        for (m, &c0) in modalities.iter_mut().zip(&TILE_COLUMNS) {
            for r in 0..TILE_SIDE {
                for c in 0..TILE_SIDE {
                    m[(r * TILE_SIDE + c, j)] = pooled[r][c0 + c];
                }
            }
        }
    }
    Ok(TiledModalities {
        modalities,
        labels: images.labels.clone(),
    })
}
