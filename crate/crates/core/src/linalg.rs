//! Dense real matrices and the SVD machinery everything else is built on.
//!
//! The SVD is a one-sided (Hestenes) Jacobi iteration. It is slow for big
//! matrices but the matrices here are at most a few hundred entries on a
//! side, and Jacobi gives orthonormal factors and small singular values to
//! full working accuracy, which the covariance constraint relies on.
//!
//! Factorizations are deterministic:
//!
//! * each singular pair is signed so that the largest-magnitude entry of the
//!   left vector is positive (first such entry on ties);
//! * the numerical rank is the number of singular values strictly above
//!   `rel_tol * sigma_1 * max(rows, cols)`;
//! * full factors are completed by Gram-Schmidt against the canonical basis
//!   `e_1, e_2, ...` in index order.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::error::{dim_err, Error, Result};

/// Default relative tolerance for the numerical rank cutoff.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 100;

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// Row-major dense matrix of `f64`.
///
/// Zero-sized dimensions are allowed: thin SVD factors of a zero matrix have
/// no columns, and downstream code treats them like any other matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting NaN and infinities.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(dim_err(
                "Matrix::from_row_major",
                format!("{} entries for a {rows}x{cols} matrix", data.len()),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(dim_err(
                    "Matrix::from_rows",
                    format!("row {i} has {} entries, expected {cols}", r.len()),
                ));
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(rows.len(), cols, data)
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.as_ref().len());
        let cols = columns.len();
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(dim_err(
                    "Matrix::from_columns",
                    format!("column {j} has {} entries, expected {rows}", c.len()),
                ));
            }
            for (i, &v) in c.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite("matrix entries"));
                }
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Entries in row-major order.
    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// The first `l` columns.
    pub fn leading_columns(&self, l: usize) -> Matrix {
        assert!(l <= self.cols, "leading_columns: {l} > {}", self.cols);
        Matrix::from_fn(self.rows, l, |i, j| self[(i, j)])
    }

    pub fn select_columns(&self, indices: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, indices.len(), |i, j| self[(i, indices[j])])
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(dim_err(
                "Matrix::vstack",
                format!("{} vs {} columns", self.cols, other.cols),
            ));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Matrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn checked_mul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(dim_err(
                "Matrix::mul",
                format!(
                    "{}x{} times {}x{}",
                    self.rows, self.cols, rhs.rows, rhs.cols
                ),
            ));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (p, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(p)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(dim_err(
                "Matrix::mul_vec",
                format!("{}x{} times vector of length {}", self.rows, self.cols, x.len()),
            ));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest absolute entry of `self * self^T - I`; zero for an empty matrix.
    pub fn row_orthonormality_residual(&self) -> f64 {
        let g = self * &self.transpose();
        max_abs_diff_identity(&g)
    }

    /// Largest absolute entry of `self^T * self - I`.
    pub fn column_orthonormality_residual(&self) -> f64 {
        let g = &self.transpose() * self;
        max_abs_diff_identity(&g)
    }

    /// Sum of elementwise products, i.e. `tr(self^T other)`.
    pub fn frobenius_inner(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "frobenius_inner shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    fn zip_with(&self, rhs: &Matrix, op: &str, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!(
            self.shape(),
            rhs.shape(),
            "matrix {op}: {:?} vs {:?}",
            self.shape(),
            rhs.shape()
        );
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

fn max_abs_diff_identity(g: &Matrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..g.rows {
        for j in 0..g.cols {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Panics on a shape mismatch; use [`Matrix::checked_mul`] for fallible code.
impl Mul<&Matrix> for &Matrix {
    type Output = Matrix;

    fn mul(self, rhs: &Matrix) -> Matrix {
        match self.checked_mul(rhs) {
            Ok(m) => m,
            Err(e) => panic!("{e}"),
        }
    }
}

impl Add<&Matrix> for &Matrix {
    type Output = Matrix;

    fn add(self, rhs: &Matrix) -> Matrix {
        self.zip_with(rhs, "add", |a, b| a + b)
    }
}

impl Sub<&Matrix> for &Matrix {
    type Output = Matrix;

    fn sub(self, rhs: &Matrix) -> Matrix {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// `a x b` matrix whose first `v.len()` diagonal entries are `v`.
pub fn diag_embed(v: &[f64], a: usize, b: usize) -> Result<Matrix> {
    if v.len() > a.min(b) {
        return Err(dim_err(
            "diag_embed",
            format!("{} diagonal values do not fit in {a}x{b}", v.len()),
        ));
    }
    let mut m = Matrix::zeros(a, b);
    for (j, &x) in v.iter().enumerate() {
        m[(j, j)] = x;
    }
    Ok(m)
}

/// The first `c` diagonal entries of `m`.
pub fn diag_extract(m: &Matrix, c: usize) -> Result<Vec<f64>> {
    if c > m.rows.min(m.cols) {
        return Err(dim_err(
            "diag_extract",
            format!("{c} diagonal entries requested from {}x{}", m.rows, m.cols),
        ));
    }
    Ok((0..c).map(|j| m[(j, j)]).collect())
}

/// `c x c` diagonal matrix holding the first `c` diagonal entries of `m`.
pub fn dg(m: &Matrix, c: usize) -> Result<Matrix> {
    diag_embed(&diag_extract(m, c)?, c, c)
}

/// Thin SVD `Z = U diag(sigma) V^T` truncated to the numerical rank.
#[derive(Clone, Debug, PartialEq)]
pub struct ThinSvd {
    /// `rows(Z) x rank`, orthonormal columns.
    pub u: Matrix,
    /// Positive, non-increasing.
    pub sigma: Vec<f64>,
    /// `cols(Z) x rank`, orthonormal columns.
    pub v: Matrix,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for i in 0..us.rows {
            for (j, s) in self.sigma.iter().enumerate() {
                us[(i, j)] *= s;
            }
        }
        &us * &self.v.transpose()
    }
}

/// Full SVD with square orthogonal factors.
#[derive(Clone, Debug, PartialEq)]
pub struct FullSvd {
    pub u_bar: Matrix,
    /// `min(rows, cols)` values, zero beyond the numerical rank.
    pub sigma_bar: Vec<f64>,
    pub v_bar: Matrix,
    /// Numerical rank used for the split between computed and completed vectors.
    pub rank: usize,
}

/// One-sided Jacobi on the columns of a tall (`m >= n`) matrix given
/// column-major. Returns the rotated columns and the accumulated `V`
/// (column-major, `n x n`).
fn jacobi_columns(mut w: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = w.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (wp, wq) = (&w[p], &w[q]);
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for (a, b) in wp.iter().zip(wq) {
                        alpha += a * a;
                        beta += b * b;
                        gamma += a * b;
                    }
                    (alpha, beta, gamma)
                };
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * sqrt(alpha) * sqrt(beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + libm::hypot(1.0, zeta))
                } else {
                    -1.0 / (-zeta + libm::hypot(1.0, zeta))
                };
                let c = 1.0 / libm::hypot(1.0, t);
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    (w, v)
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let (cp, cq) = (&mut head[p], &mut tail[0]);
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

fn norm(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|x| x * x).sum())
}

/// Sorted singular triplets of a tall matrix: (sigma, left vector, right vector).
struct Triplets {
    sigma: Vec<f64>,
    left: Vec<Vec<f64>>,
    right: Vec<Vec<f64>>,
}

fn tall_triplets(z: &Matrix) -> Triplets {
    let (m, n) = z.shape();
    debug_assert!(m >= n);
    let cols: Vec<Vec<f64>> = (0..n).map(|j| z.column(j)).collect();
    let (w, v) = jacobi_columns(cols);
    let norms: Vec<f64> = w.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal singular values keep column order
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap_or(core::cmp::Ordering::Equal));
    let mut sigma = Vec::with_capacity(n);
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for j in order {
        let s = norms[j];
        let u = if s > 0.0 {
            w[j].iter().map(|x| x / s).collect()
        } else {
            vec![0.0; m]
        };
        sigma.push(s);
        left.push(u);
        right.push(v[j].clone());
    }
    Triplets { sigma, left, right }
}

fn numerical_rank(sigma: &[f64], rows: usize, cols: usize, rel_tol: f64) -> usize {
    let Some(&top) = sigma.first() else {
        return 0;
    };
    if top <= 0.0 {
        return 0;
    }
    let cutoff = rel_tol * top * rows.max(cols) as f64;
    sigma.iter().take_while(|&&s| s > cutoff).count()
}

/// Flips `(u, v)` so the largest-magnitude entry of `u` is positive.
fn apply_sign_convention(u: &mut [f64], v: &mut [f64]) {
    let mut best = 0usize;
    let mut best_abs = -1.0f64;
    for (i, x) in u.iter().enumerate() {
        if x.abs() > best_abs {
            best_abs = x.abs();
            best = i;
        }
    }
    if !u.is_empty() && u[best] < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Thin SVD truncated at the numerical rank `sigma_j > rel_tol * sigma_1 * max(rows, cols)`.
pub fn thin_svd(z: &Matrix, rel_tol: f64) -> Result<ThinSvd> {
    if !z.is_finite() {
        return Err(Error::NonFinite("thin_svd input"));
    }
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "rank tolerance must be positive, got {rel_tol}"
        )));
    }
    let (m, n) = z.shape();
    let transposed = m < n;
    let t = if transposed {
        tall_triplets(&z.transpose())
    } else {
        tall_triplets(z)
    };
    let (mut left, mut right) = if transposed {
        (t.right, t.left)
    } else {
        (t.left, t.right)
    };
    let r = numerical_rank(&t.sigma, m, n, rel_tol);
    for j in 0..r {
        apply_sign_convention(&mut left[j], &mut right[j]);
    }
    let u = Matrix::from_fn(m, r, |i, j| left[j][i]);
    let v = Matrix::from_fn(n, r, |i, j| right[j][i]);
    Ok(ThinSvd {
        u,
        sigma: t.sigma[..r].to_vec(),
        v,
    })
}

/// Extends the orthonormal columns of `basis` to an orthonormal basis of
/// `R^dim` by Gram-Schmidt against `e_1, e_2, ...` in order.
pub fn complete_orthonormal(basis: &Matrix) -> Matrix {
    let dim = basis.rows();
    let mut cols: Vec<Vec<f64>> = (0..basis.cols()).map(|j| basis.column(j)).collect();
    // Residual norms of the canonical vectors sum (squared) to the number of
    // missing directions, so this threshold can never exhaust the candidates.
    let accept = 0.5 / sqrt(dim.max(1) as f64);
    let mut e = 0;
    while cols.len() < dim && e < dim {
        let mut x = vec![0.0; dim];
        x[e] = 1.0;
        for _ in 0..2 {
            for c in &cols {
                let d: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(c).for_each(|(xi, ci)| *xi -= d * ci);
            }
        }
        let nx = norm(&x);
        if nx > accept {
            x.iter_mut().for_each(|xi| *xi /= nx);
            cols.push(x);
        }
        e += 1;
    }
    debug_assert_eq!(cols.len(), dim);
    Matrix::from_fn(dim, cols.len(), |i, j| cols[j][i])
}

pub fn full_svd(z: &Matrix) -> Result<FullSvd> {
    full_svd_with_tol(z, DEFAULT_RANK_TOL)
}

/// Full SVD: the thin factors at numerical rank, completed to square
/// orthogonal matrices, with zero singular values beyond the rank.
pub fn full_svd_with_tol(z: &Matrix, rel_tol: f64) -> Result<FullSvd> {
    let thin = thin_svd(z, rel_tol)?;
    let rank = thin.rank();
    let mut sigma_bar = thin.sigma.clone();
    sigma_bar.resize(z.rows().min(z.cols()), 0.0);
    Ok(FullSvd {
        u_bar: complete_orthonormal(&thin.u),
        sigma_bar,
        v_bar: complete_orthonormal(&thin.v),
        rank,
    })
}

/// Best rank-`ell` approximation `B = sum_{j < ell} sigma_j u_j v_j^T` and its factors.
pub fn best_rank(svd: &ThinSvd, ell: usize) -> Result<(Matrix, ThinSvd)> {
    if ell < 1 || ell > svd.rank() {
        return Err(dim_err(
            "best_rank",
            format!("rank {ell} requested from a rank-{} factorization", svd.rank()),
        ));
    }
    let truncated = ThinSvd {
        u: svd.u.leading_columns(ell),
        sigma: svd.sigma[..ell].to_vec(),
        v: svd.v.leading_columns(ell),
    };
    Ok((truncated.reconstruct(), truncated))
}
