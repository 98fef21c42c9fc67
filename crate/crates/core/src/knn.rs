//! Exact brute-force k-nearest-neighbor classification.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{dim_err, Error, Result};
use crate::linalg::Matrix;

pub const DEFAULT_NEIGHBORS: usize = 15;

/// Stores the training points; prediction scans all of them.
#[derive(Clone, Debug)]
pub struct KnnModel {
    /// One training point per row.
    points: Matrix,
    labels: Vec<u8>,
    neighbors: usize,
}

impl KnnModel {
    /// `points` is `k x n_train` with one training point per column.
    pub fn train(points: &Matrix, labels: &[u8], neighbors: usize) -> Result<Self> {
        let n = points.cols();
        if labels.len() != n {
            return Err(dim_err(
                "KnnModel::train",
                format!("{} labels for {n} points", labels.len()),
            ));
        }
        if neighbors == 0 || neighbors > n {
            return Err(Error::InvalidArgument(format!(
                "neighbors must be in 1..={n}, got {neighbors}"
            )));
        }
        if !points.is_finite() {
            return Err(Error::NonFinite("kNN training points"));
        }
        Ok(Self {
            points: points.transpose(),
            labels: labels.to_vec(),
            neighbors,
        })
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }

    pub fn len(&self) -> usize {
        self.points.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn neighbors(&self) -> usize {
        self.neighbors
    }

    /// Indices of the `neighbors` nearest training points, nearest first.
    /// Equal distances are ordered by index.
    pub fn nearest(&self, query: &[f64]) -> Result<Vec<usize>> {
        if query.len() != self.dim() {
            return Err(dim_err(
                "KnnModel::predict",
                format!("query has length {}, expected {}", query.len(), self.dim()),
            ));
        }
        let mut dist: Vec<(f64, usize)> = (0..self.len())
            .map(|j| {
                let d = self
                    .points
                    .row(j)
                    .iter()
                    .zip(query)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
                (d, j)
            })
            .collect();
        let key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.neighbors < dist.len() {
            dist.select_nth_unstable_by(self.neighbors - 1, key);
            dist.truncate(self.neighbors);
        }
        dist.sort_unstable_by(key);
        Ok(dist.into_iter().map(|(_, j)| j).collect())
    }

    /// Majority label among the nearest neighbors; ties go to the smaller label.
    pub fn predict(&self, query: &[f64]) -> Result<u8> {
        let mut votes = [0usize; 256];
        for j in self.nearest(query)? {
            votes[self.labels[j] as usize] += 1;
        }
        let mut best = 0;
        for (label, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = label;
            }
        }
        Ok(best as u8)
    }

    /// Predicts every column of `queries`.
    pub fn predict_columns(&self, queries: &Matrix) -> Result<Vec<u8>> {
        (0..queries.cols())
            .map(|j| self.predict(&queries.column(j)))
            .collect()
    }

    /// Fraction of columns of `queries` predicted as `labels`.
    pub fn accuracy(&self, queries: &Matrix, labels: &[u8]) -> Result<f64> {
        if queries.cols() == 0 {
            return Err(Error::EmptyTestSet);
        }
        if labels.len() != queries.cols() {
            return Err(dim_err(
                "KnnModel::accuracy",
                format!("{} labels for {} queries", labels.len(), queries.cols()),
            ));
        }
        let predicted = self.predict_columns(queries)?;
        let correct = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
        Ok(correct as f64 / labels.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols(c: &[&[f64]]) -> Matrix {
        Matrix::from_columns(c).unwrap()
    }

    #[test]
    fn single_point() {
        let m = KnnModel::train(&cols(&[&[1.0, 2.0]]), &[7], 1).unwrap();
        assert_eq!(m.predict(&[100.0, -3.0]).unwrap(), 7);
    }

    #[test]
    fn self_classification() {
        let pts = cols(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[5.0, 5.0]]);
        let labels = [0, 1, 2, 1];
        let m = KnnModel::train(&pts, &labels, 1).unwrap();
        assert_eq!(m.accuracy(&pts, &labels).unwrap(), 1.0);
    }

    #[test]
    fn tie_goes_to_lower_label() {
        let m = KnnModel::train(&cols(&[&[1.0], &[-1.0]]), &[3, 2], 2).unwrap();
        assert_eq!(m.predict(&[0.0]).unwrap(), 2);
    }

    #[test]
    fn equidistant_cutoff_prefers_lower_index() {
        let m = KnnModel::train(&cols(&[&[0.0], &[1.0], &[-1.0]]), &[0, 5, 4], 2).unwrap();
        assert_eq!(m.nearest(&[0.0]).unwrap(), vec![0, 1]);
    }

    #[test]
    fn errors() {
        let pts = cols(&[&[0.0], &[1.0]]);
        assert!(KnnModel::train(&pts, &[0, 1], 3).is_err());
        assert!(KnnModel::train(&pts, &[0, 1], 0).is_err());
        assert!(KnnModel::train(&pts, &[0], 1).is_err());
        let m = KnnModel::train(&pts, &[0, 1], 1).unwrap();
        assert!(m.predict(&[0.0, 1.0]).is_err());
        assert_eq!(m.accuracy(&Matrix::zeros(1, 0), &[]), Err(Error::EmptyTestSet));
    }
}
