#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sgm_core::linalg::{Matrix, DEFAULT_RANK_TOL};
use sgm_core::procrustes::{FeasibleTuple, ProcrustesInstance};
use sgm_core::{ModalityData, PrescribedCovariance, SgmConfig};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn mnist_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist-2000")
}

pub fn mnist_images() -> PathBuf {
    mnist_dir().join("images.idx3-ubyte")
}

pub fn mnist_labels() -> PathBuf {
    mnist_dir().join("labels.idx1-ubyte")
}

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn low_rank_data(rng: &mut impl Rng, d: usize, n: usize, rank: usize) -> ModalityData {
    let x = &gaussian(rng, d, rank) * &gaussian(rng, rank, n);
    let shift: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
    ModalityData::new(Matrix::from_fn(d, n, |i, j| x[(i, j)] + shift[i])).unwrap()
}

pub fn random_cov(rng: &mut impl Rng, k: usize, rank: usize) -> PrescribedCovariance {
    PrescribedCovariance::from_factor(&gaussian(rng, k, rank), DEFAULT_RANK_TOL).unwrap()
}

pub fn random_weights(rng: &mut impl Rng, m: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let head: f64 = w[..m - 1].iter().sum();
    w[m - 1] = 1.0 - head;
    w
}

pub fn orthonormal_rows(rng: &mut impl Rng, rows: usize, cols: usize) -> Matrix {
    assert!(rows <= cols);
    if rows == 0 {
        return Matrix::zeros(0, cols);
    }
    let mut q: Vec<Vec<f64>> = Vec::new();
    while q.len() < rows {
        let mut v: Vec<f64> = (0..cols).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for u in &q {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-6 {
            q.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    Matrix::from_rows(&q).unwrap()
}

pub fn random_instance(
    rng: &mut impl Rng,
    rows_l: usize,
    rows_r: usize,
    cols: &[(usize, usize)],
) -> ProcrustesInstance {
    let l = cols.iter().map(|&(cl, _)| gaussian(rng, rows_l, cl)).collect();
    let r = cols.iter().map(|&(_, cr)| gaussian(rng, rows_r, cr)).collect();
    let w = random_weights(rng, cols.len());
    ProcrustesInstance::new(l, r, w).unwrap()
}

pub fn random_tuple(rng: &mut impl Rng, inst: &ProcrustesInstance) -> FeasibleTuple {
    FeasibleTuple {
        q0: orthonormal_rows(rng, inst.rows_l(), inst.rows_r()),
        qi: inst
            .l()
            .iter()
            .zip(inst.r())
            .map(|(l, r)| orthonormal_rows(rng, l.cols(), r.cols()))
            .collect(),
    }
}

/// Singular values from power iteration with deflation on `Z^T Z`.
pub fn singular_values_oracle(z: &Matrix) -> Vec<f64> {
    let n = z.cols();
    let mut g: Vec<Vec<f64>> = (0..n)
        .map(|a| (0..n).map(|b| (0..z.rows()).map(|i| z[(i, a)] * z[(i, b)]).sum()).collect())
        .collect();
    let mut out = Vec::new();
    for _ in 0..n.min(z.rows()) {
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.37).collect();
        let mut lambda = 0.0;
        for _ in 0..5000 {
            let w: Vec<f64> = (0..n).map(|a| (0..n).map(|b| g[a][b] * v[b]).sum()).collect();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                lambda = 0.0;
                break;
            }
            let done = w.iter().zip(&v).all(|(a, b)| (a / norm - b).abs() < 1e-15);
            v = w.iter().map(|x| x / norm).collect();
            lambda = norm;
            if done {
                break;
            }
        }
        out.push(lambda.max(0.0).sqrt());
        for a in 0..n {
            for b in 0..n {
                g[a][b] -= lambda * v[a] * v[b];
            }
        }
    }
    out
}

pub fn covariance_oracle(x: &Matrix) -> Matrix {
    let (d, n) = x.shape();
    let mean: Vec<f64> = (0..d).map(|i| (0..n).map(|j| x[(i, j)]).sum::<f64>() / n as f64).collect();
    Matrix::from_fn(d, d, |a, b| {
        (0..n).map(|j| (x[(a, j)] - mean[a]) * (x[(b, j)] - mean[b])).sum::<f64>() / (n - 1) as f64
    })
}

pub fn nuclear_norm_2x2(p: &Matrix) -> f64 {
    let f2 = p.as_slice().iter().map(|v| v * v).sum::<f64>();
    let det = p[(0, 0)] * p[(1, 1)] - p[(0, 1)] * p[(1, 0)];
    (f2 + 2.0 * det.abs()).sqrt()
}

pub fn o2(theta: f64, reflect: bool) -> Matrix {
    let (s, c) = theta.sin_cos();
    let f = if reflect { -1.0 } else { 1.0 };
    Matrix::from_rows(&[[c, -s], [f * s, f * c]]).unwrap()
}

pub struct Problem {
    pub data: Vec<ModalityData>,
    pub covs: Vec<PrescribedCovariance>,
    pub config: SgmConfig,
    /// Some modality has `rank(S_i) < rank(C_i C_i^T)`.
    pub rank_deficient: bool,
}

/// m in {1,2,3}, d_i in 4..=12, n in 5..=40, k in 2..=8, covariances of
/// random rank. Odd cases force one modality's data rank below its
/// covariance rank.
pub fn random_problem(rng: &mut impl Rng, case: usize) -> Problem {
    let m = rng.random_range(1..=3usize);
    let k = rng.random_range(2..=8usize);
    let n = rng.random_range(5..=40usize);
    let covs: Vec<PrescribedCovariance> = (0..=m)
        .map(|_| {
            let r = rng.random_range(1..=k);
            random_cov(rng, k, r)
        })
        .collect();
    let forced = if case % 2 == 1 { Some(rng.random_range(0..=m)) } else { None };
    let data: Vec<ModalityData> = covs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let d = rng.random_range(4..=12usize);
            let full = d.min(n - 1);
            let latent = if forced == Some(i) {
                // Below the covariance rank whenever that is possible.
                if c.rank() > 1 { rng.random_range(1..c.rank()) } else { 1 }
            } else {
                rng.random_range(1..=full)
            };
            low_rank_data(rng, d, n, latent.min(full))
        })
        .collect();
    let rank_deficient = data.iter().zip(&covs).any(|(x, c)| {
        let st = sgm_core::stats::center_scale(x, DEFAULT_RANK_TOL).unwrap();
        st.rank() < c.rank()
    });
    Problem { data, covs, config: SgmConfig::new(k, random_weights(rng, m)), rank_deficient }
}
