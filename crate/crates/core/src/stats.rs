//! Finite-sample statistics for one modality.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{sqrt, thin_svd, Matrix, ThinSvd};

/// `d x n` samples of one modality; column `j` is the `j`-th observation.
#[derive(Clone, Debug, PartialEq)]
pub struct ModalityData {
    samples: Matrix,
}

impl ModalityData {
    /// Requires `d >= 2`, `n >= 2` and finite entries.
    pub fn new(samples: Matrix) -> Result<Self> {
        let (d, n) = samples.shape();
        if d < 2 {
            return Err(dim_err("ModalityData", format!("dimension {d} < 2")));
        }
        if n < 2 {
            return Err(dim_err("ModalityData", format!("{n} samples < 2")));
        }
        if !samples.is_finite() {
            return Err(Error::NonFinite("modality samples"));
        }
        Ok(Self { samples })
    }

    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        Self::new(Matrix::from_columns(columns)?)
    }

    pub fn dim(&self) -> usize {
        self.samples.rows()
    }

    pub fn count(&self) -> usize {
        self.samples.cols()
    }

    pub fn samples(&self) -> &Matrix {
        &self.samples
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.samples.column(j)
    }

    /// Subset of samples in the given order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&j| j >= self.count()) {
            return Err(dim_err(
                "ModalityData::select",
                format!("index {bad} out of range for {} samples", self.count()),
            ));
        }
        Self::new(self.samples.select_columns(indices))
    }

    /// Concatenates the feature vectors of two matched modalities.
    pub fn stack(&self, lower: &ModalityData) -> Result<Self> {
        if self.count() != lower.count() {
            return Err(Error::SampleCount {
                modality: 1,
                expected: self.count(),
                found: lower.count(),
            });
        }
        Self::new(self.samples.vstack(&lower.samples)?)
    }
}

/// Mean, scaled-centered data matrix `S` and its thin SVD.
#[derive(Clone, Debug)]
pub struct CenteredStats {
    pub mean: Vec<f64>,
    /// Column `j` is `(x_j - mean) / sqrt(n - 1)`, so `S S^T` is the unbiased covariance.
    pub s: Matrix,
    pub s_svd: ThinSvd,
}

impl CenteredStats {
    pub fn rank(&self) -> usize {
        self.s_svd.rank()
    }

    /// `S S^T`; only used for checks, training works from the SVD.
    pub fn covariance(&self) -> Matrix {
        &self.s * &self.s.transpose()
    }
}

pub fn sample_mean(data: &ModalityData) -> Vec<f64> {
    let (d, n) = data.samples.shape();
    let mut mean = vec![0.0; d];
    for (i, m) in mean.iter_mut().enumerate() {
        *m = data.samples.row(i).iter().sum::<f64>() / n as f64;
    }
    mean
}

pub fn center_scale(data: &ModalityData, rel_tol: f64) -> Result<CenteredStats> {
    let mean = sample_mean(data);
    let n = data.count();
    let scale = 1.0 / sqrt((n - 1) as f64);
    let s = Matrix::from_fn(data.dim(), n, |i, j| {
        (data.samples[(i, j)] - mean[i]) * scale
    });
    let s_svd = thin_svd(&s, rel_tol)?;
    Ok(CenteredStats { mean, s, s_svd })
}
