//! Training and application of SGM maps.
//!
//! For each modality `i` the map is `g_i(x) = A_i x + b_i` with
//!
//! ```text
//! A_i = (U_Ci)[:, :r_i] dg(Sigma_Ci) D_i Sigma_Si^-1 U_Si^T,    b_i = -A_i mu_i
//! ```
//!
//! where `C_i C_i^T = U_Ci Sigma_Ci^2 U_Ci^T` is the prescribed covariance,
//! `S_i = U_Si Sigma_Si V_Si^T` the scaled-centered data and
//! `r_i = min(rank(C_i C_i^T), rank(S_i))`. Any `D_i` with orthonormal rows
//! makes the mapped training covariance equal the best rank-`r_i`
//! approximation of the prescribed one. The `D_i` are chosen by the
//! trace maximization in [`crate::procrustes`] with
//!
//! ```text
//! L_i = dg(Sigma_C0) (U_C0)[:, :r_0]^T (U_Ci)[:, :r_i] dg(Sigma_Ci),    R_i = V_S0^T V_Si.
//! ```

use alloc::format;
use alloc::vec::Vec;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{sqrt, thin_svd, Matrix, ThinSvd, DEFAULT_RANK_TOL};
use crate::procrustes::{
    self, validate_weights, FeasibleTuple, ProcrustesInstance, Refinement,
    DEFAULT_MAX_OUTER_ITERS,
};
use crate::stats::{center_scale, CenteredStats, ModalityData};

const SYMMETRY_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-8;

/// A prescribed `k x k` covariance `C C^T` with its eigenfactorization.
#[derive(Clone, Debug)]
pub struct PrescribedCovariance {
    matrix: Matrix,
    /// `u == v` holds the eigenvectors, `sigma` the positive eigenvalues.
    eig: ThinSvd,
    /// Square roots of the eigenvalues.
    sigma_c: Vec<f64>,
}

impl PrescribedCovariance {
    /// From a symmetric positive semidefinite `k x k` matrix.
    pub fn from_matrix(matrix: Matrix, rel_tol: f64) -> Result<Self> {
        let (k, cols) = matrix.shape();
        if k != cols || k == 0 {
            return Err(dim_err(
                "PrescribedCovariance",
                format!("covariance must be square and non-empty, got {k}x{cols}"),
            ));
        }
        let norm = matrix.frobenius_norm();
        let asym = (&matrix - &matrix.transpose()).frobenius_norm();
        if asym > SYMMETRY_TOL * norm.max(1.0) {
            return Err(Error::NotSymmetric(asym / norm.max(f64::MIN_POSITIVE)));
        }
        let mut eig = thin_svd(&matrix, rel_tol)?;
        // For a PSD matrix the SVD is an eigendecomposition: M = U diag(s) U^T.
        eig.v = eig.u.clone();
        let residual = (&eig.reconstruct() - &matrix).frobenius_norm();
        if residual > PSD_TOL * norm.max(1.0) {
            return Err(Error::NotPsd);
        }
        let sigma_c = eig.sigma.iter().map(|&s| sqrt(s)).collect();
        Ok(Self {
            matrix,
            eig,
            sigma_c,
        })
    }

    /// From a factor `C` (`k x r`); the covariance is `C C^T`.
    pub fn from_factor(c: &Matrix, rel_tol: f64) -> Result<Self> {
        Self::from_matrix(c * &c.transpose(), rel_tol)
    }

    pub fn identity(k: usize) -> Self {
        Self::from_matrix(Matrix::identity(k), DEFAULT_RANK_TOL)
            .expect("identity is a valid covariance")
    }

    pub fn k(&self) -> usize {
        self.matrix.rows()
    }

    pub fn rank(&self) -> usize {
        self.eig.rank()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn eig(&self) -> &ThinSvd {
        &self.eig
    }

    pub fn sigma_c(&self) -> &[f64] {
        &self.sigma_c
    }

    /// Best approximation of rank at most `r` (the zero matrix for `r = 0`).
    pub fn best_approximation(&self, r: usize) -> Matrix {
        let r = r.min(self.rank());
        let u = self.eig.u.leading_columns(r);
        let scaled = Matrix::from_fn(self.k(), r, |i, j| u[(i, j)] * self.eig.sigma[j]);
        &scaled * &u.transpose()
    }

    /// `tr` of [`Self::best_approximation`].
    pub fn best_approximation_trace(&self, r: usize) -> f64 {
        self.eig.sigma.iter().take(r).sum()
    }

    /// `(U_C)[:, :r] dg(Sigma_C)`, a `k x r` matrix.
    fn scaled_basis(&self, r: usize) -> Matrix {
        Matrix::from_fn(self.k(), r, |i, j| self.eig.u[(i, j)] * self.sigma_c[j])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SgmConfig {
    /// Common-domain dimension.
    pub k: usize,
    /// One weight per non-central modality.
    pub weights: Vec<f64>,
    pub rel_tol: f64,
    pub max_outer_iters: usize,
}

impl SgmConfig {
    pub fn new(k: usize, weights: Vec<f64>) -> Self {
        Self {
            k,
            weights,
            rel_tol: DEFAULT_RANK_TOL,
            max_outer_iters: DEFAULT_MAX_OUTER_ITERS,
        }
    }
}

/// `x -> a x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap {
    pub a: Matrix,
    pub b: Vec<f64>,
}

impl LinearMap {
    pub fn input_dim(&self) -> usize {
        self.a.cols()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.a.mul_vec(x)?;
        y.iter_mut().zip(&self.b).for_each(|(yi, bi)| *yi += bi);
        Ok(y)
    }

    /// Maps every column of `x`.
    pub fn apply_columns(&self, x: &Matrix) -> Result<Matrix> {
        let mut y = self.a.checked_mul(x)?;
        for (i, bi) in self.b.iter().enumerate() {
            y.row_mut(i).iter_mut().for_each(|v| *v += bi);
        }
        Ok(y)
    }
}

/// Trained SGM maps. Index 0 is the central modality.
#[derive(Clone, Debug, PartialEq)]
pub struct SgmModel {
    pub k: usize,
    pub weights: Vec<f64>,
    pub maps: Vec<LinearMap>,
    pub r_min: Vec<usize>,
    pub trace_ratio: f64,
    pub refine_iters: usize,
}

impl SgmModel {
    /// Number of non-central modalities.
    pub fn m(&self) -> usize {
        self.maps.len().saturating_sub(1)
    }

    pub fn dims(&self) -> Vec<usize> {
        self.maps.iter().map(LinearMap::input_dim).collect()
    }

    /// Structural consistency of a model assembled from stored parts.
    pub fn validate(&self) -> Result<()> {
        let m = self.m();
        if self.maps.len() < 2 {
            return Err(Error::InvalidArgument("a model needs at least two maps".into()));
        }
        validate_weights(&self.weights, m)?;
        if self.r_min.len() != self.maps.len() {
            return Err(dim_err(
                "SgmModel",
                format!("{} ranks for {} maps", self.r_min.len(), self.maps.len()),
            ));
        }
        for (i, map) in self.maps.iter().enumerate() {
            if map.a.rows() != self.k || map.b.len() != self.k {
                return Err(dim_err(
                    "SgmModel",
                    format!("map {i} does not produce {}-dimensional output", self.k),
                ));
            }
            if !map.a.is_finite() || map.b.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("model maps"));
            }
        }
        Ok(())
    }

    /// `g_modality(x)`.
    pub fn apply(&self, modality: usize, x: &[f64]) -> Result<Vec<f64>> {
        let map = self.maps.get(modality).ok_or(Error::ModalityIndex {
            index: modality,
            count: self.maps.len(),
        })?;
        map.apply(x)
    }

    /// Maps every sample (column) of `data`; returns one vector per sample.
    pub fn apply_all(&self, modality: usize, data: &ModalityData) -> Result<Vec<Vec<f64>>> {
        (0..data.count())
            .map(|j| self.apply(modality, &data.column(j)))
            .collect()
    }
}

pub fn r_min(cov_rank: usize, s_rank: usize) -> usize {
    cov_rank.min(s_rank)
}

/// `(L_i, R_i)` for the pair (central, `i`).
pub fn build_lr(
    c0: &PrescribedCovariance,
    ci: &PrescribedCovariance,
    s0: &CenteredStats,
    si: &CenteredStats,
) -> Result<(Matrix, Matrix)> {
    if c0.k() != ci.k() {
        return Err(Error::CovarianceDimension {
            index: 1,
            expected: c0.k(),
            found: ci.k(),
        });
    }
    let r0 = r_min(c0.rank(), s0.rank());
    let ri = r_min(ci.rank(), si.rank());
    let l = &c0.scaled_basis(r0).transpose() * &ci.scaled_basis(ri);
    let r = &s0.s_svd.v.transpose() * &si.s_svd.v;
    Ok((l, r))
}

/// `A = (U_C)[:, :r] dg(Sigma_C) D Sigma_S^-1 U_S^T`, `b = -A mean`.
pub fn assemble_map(
    ci: &PrescribedCovariance,
    si: &CenteredStats,
    d: &Matrix,
    mean: &[f64],
) -> Result<LinearMap> {
    let s_rank = si.rank();
    if s_rank == 0 {
        return Err(Error::ZeroRankData);
    }
    let r = r_min(ci.rank(), s_rank);
    if d.shape() != (r, s_rank) {
        return Err(dim_err(
            "assemble_map",
            format!("D is {:?}, expected {:?}", d.shape(), (r, s_rank)),
        ));
    }
    if mean.len() != si.s.rows() {
        return Err(dim_err(
            "assemble_map",
            format!("mean has length {}, data dimension is {}", mean.len(), si.s.rows()),
        ));
    }
    let svd = &si.s_svd;
    let inv_u_t = Matrix::from_fn(s_rank, svd.u.rows(), |i, j| svd.u[(j, i)] / svd.sigma[i]);
    let a = &(&ci.scaled_basis(r) * d) * &inv_u_t;
    let mut b = a.mul_vec(mean)?;
    b.iter_mut().for_each(|v| *v = -*v);
    Ok(LinearMap { a, b })
}

/// Everything produced while training, for diagnostics and checks.
#[derive(Clone, Debug)]
pub struct Training {
    pub model: SgmModel,
    pub stats: Vec<CenteredStats>,
    pub instance: ProcrustesInstance,
    /// Closed-form starting point.
    pub initial: FeasibleTuple,
    pub refinement: Refinement,
}

impl Training {
    /// The `D` tuple the maps were built from.
    pub fn tuple(&self) -> &FeasibleTuple {
        &self.refinement.tuple
    }
}

pub fn train(
    datasets: &[ModalityData],
    covariances: &[PrescribedCovariance],
    config: &SgmConfig,
) -> Result<SgmModel> {
    train_detailed(datasets, covariances, config).map(|t| t.model)
}

fn validate_inputs(
    datasets: &[ModalityData],
    covariances: &[PrescribedCovariance],
    config: &SgmConfig,
) -> Result<()> {
    if datasets.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need a central and at least one other modality, got {}",
            datasets.len()
        )));
    }
    if covariances.len() != datasets.len() {
        return Err(Error::InvalidArgument(format!(
            "{} covariances for {} modalities",
            covariances.len(),
            datasets.len()
        )));
    }
    if config.k == 0 {
        return Err(Error::InvalidArgument("common dimension k must be at least 1".into()));
    }
    validate_weights(&config.weights, datasets.len() - 1)?;
    for (index, c) in covariances.iter().enumerate() {
        if c.k() != config.k {
            return Err(Error::CovarianceDimension {
                index,
                expected: config.k,
                found: c.k(),
            });
        }
    }
    let n = datasets[0].count();
    for (modality, d) in datasets.iter().enumerate() {
        if d.count() != n {
            return Err(Error::SampleCount {
                modality,
                expected: n,
                found: d.count(),
            });
        }
    }
    Ok(())
}

/// Runs the full pipeline: statistics, `(L_i, R_i)`, the closed-form point,
/// its refinement, the maps and the trace ratio.
pub fn train_detailed(
    datasets: &[ModalityData],
    covariances: &[PrescribedCovariance],
    config: &SgmConfig,
) -> Result<Training> {
    validate_inputs(datasets, covariances, config)?;

    let stats = datasets
        .iter()
        .map(|d| center_scale(d, config.rel_tol))
        .collect::<Result<Vec<_>>>()?;
    if let Some(modality) = stats.iter().position(|s| s.rank() == 0) {
        return Err(Error::DegenerateData { modality });
    }

    let mut ls = Vec::with_capacity(datasets.len() - 1);
    let mut rs = Vec::with_capacity(datasets.len() - 1);
    for i in 1..datasets.len() {
        let (l, r) = build_lr(&covariances[0], &covariances[i], &stats[0], &stats[i])?;
        ls.push(l);
        rs.push(r);
    }
    let instance = ProcrustesInstance::new(ls, rs, config.weights.clone())?;
    let initial = procrustes::solve_related(&instance);
    let refinement = procrustes::refine(&initial, &instance, config.max_outer_iters)?;

    let tuple = &refinement.tuple;
    let maps = stats
        .iter()
        .zip(covariances)
        .enumerate()
        .map(|(i, (st, c))| {
            let d = if i == 0 { &tuple.q0 } else { &tuple.qi[i - 1] };
            assemble_map(c, st, d, &st.mean)
        })
        .collect::<Result<Vec<_>>>()?;
    let r_min: Vec<usize> = stats
        .iter()
        .zip(covariances)
        .map(|(s, c)| r_min(c.rank(), s.rank()))
        .collect();
    let trace_ratio = trace_ratio(tuple, covariances, &stats, &config.weights)?;

    let model = SgmModel {
        k: config.k,
        weights: config.weights.clone(),
        maps,
        r_min,
        trace_ratio,
        refine_iters: refinement.iterations,
    };
    Ok(Training {
        model,
        stats,
        instance,
        initial,
        refinement,
    })
}

/// Per non-central modality: `(tr(D_i^T dg(S_Ci) U_Ci^T U_C0 dg(S_C0) D_0 V_S0^T V_Si),
/// tr(B_C0) + tr(B_Ci))`.
fn trace_terms(
    tuple: &FeasibleTuple,
    covariances: &[PrescribedCovariance],
    stats: &[CenteredStats],
) -> Result<Vec<(f64, f64)>> {
    let m = tuple.qi.len();
    if covariances.len() != m + 1 || stats.len() != m + 1 {
        return Err(Error::InvalidArgument(format!(
            "tuple has {} modalities, got {} covariances and {} statistics",
            m + 1,
            covariances.len(),
            stats.len()
        )));
    }
    let r0 = r_min(covariances[0].rank(), stats[0].rank());
    let b0 = covariances[0].best_approximation_trace(r0);
    let c0 = covariances[0].scaled_basis(r0);
    let mut out = Vec::with_capacity(m);
    for i in 1..=m {
        let ri = r_min(covariances[i].rank(), stats[i].rank());
        let ci = covariances[i].scaled_basis(ri);
        let d_i = &tuple.qi[i - 1];
        let cross = &(&(&(&d_i.transpose() * &ci.transpose()) * &c0) * &tuple.q0)
            * &(&stats[0].s_svd.v.transpose() * &stats[i].s_svd.v);
        out.push((cross.trace(), b0 + covariances[i].best_approximation_trace(ri)));
    }
    Ok(out)
}

/// Fraction of the maximal trace objective achieved; 1 means every matched
/// pair is mapped to the same point. At most 1; negative only for
/// adversarial data.
pub fn trace_ratio(
    tuple: &FeasibleTuple,
    covariances: &[PrescribedCovariance],
    stats: &[CenteredStats],
    weights: &[f64],
) -> Result<f64> {
    let terms = trace_terms(tuple, covariances, stats)?;
    validate_weights(weights, terms.len())?;
    let num: f64 = terms.iter().zip(weights).map(|((c, _), w)| 2.0 * w * c).sum();
    let den: f64 = terms.iter().zip(weights).map(|((_, b), w)| w * b).sum();
    if den <= 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(num / den)
}

/// `(n-1)/n sum_i lambda_i ||A_0 S_0 - A_i S_i||_F^2`, computed from the maps.
pub fn matching_objective(model: &SgmModel, stats: &[CenteredStats]) -> Result<f64> {
    if stats.len() != model.maps.len() {
        return Err(Error::InvalidArgument(format!(
            "{} statistics for {} maps",
            stats.len(),
            model.maps.len()
        )));
    }
    let n = stats[0].s.cols() as f64;
    let mapped0 = model.maps[0].a.checked_mul(&stats[0].s)?;
    let mut total = 0.0;
    for i in 1..model.maps.len() {
        let mapped = model.maps[i].a.checked_mul(&stats[i].s)?;
        let diff = &mapped0 - &mapped;
        let f = diff.frobenius_norm();
        total += model.weights[i - 1] * f * f;
    }
    Ok((n - 1.0) / n * total)
}

/// The same objective expanded into traces of the best approximations and
/// the cross term, evaluated from the `D` tuple without forming the maps.
pub fn matching_objective_trace_form(
    tuple: &FeasibleTuple,
    covariances: &[PrescribedCovariance],
    stats: &[CenteredStats],
    weights: &[f64],
) -> Result<f64> {
    let terms = trace_terms(tuple, covariances, stats)?;
    let n = stats[0].s.cols() as f64;
    let total: f64 = terms
        .iter()
        .zip(weights)
        .map(|((cross, b), w)| w * (b - 2.0 * cross))
        .sum();
    Ok((n - 1.0) / n * total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn data(cols: &[&[f64]]) -> ModalityData {
        ModalityData::from_columns(cols).unwrap()
    }

    #[test]
    fn r_min_is_min() {
        assert_eq!(r_min(5, 3), 3);
        assert_eq!(r_min(3, 5), 3);
    }

    #[test]
    fn covariance_validation() {
        let asym = Matrix::from_rows(&[[1.0, 0.5], [0.0, 1.0]]).unwrap();
        assert!(matches!(
            PrescribedCovariance::from_matrix(asym, DEFAULT_RANK_TOL),
            Err(Error::NotSymmetric(_))
        ));
        let indefinite = Matrix::from_rows(&[[1.0, 0.0], [0.0, -1.0]]).unwrap();
        assert!(matches!(
            PrescribedCovariance::from_matrix(indefinite, DEFAULT_RANK_TOL),
            Err(Error::NotPsd)
        ));
        let c = Matrix::from_rows(&[[1.0], [1.0]]).unwrap();
        let cov = PrescribedCovariance::from_factor(&c, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(cov.rank(), 1);
        assert!((cov.eig().sigma[0] - 2.0).abs() < 1e-14);
        assert!((cov.sigma_c()[0] - sqrt(2.0)).abs() < 1e-14);
        let id = PrescribedCovariance::identity(3);
        assert_eq!(id.rank(), 3);
        assert_eq!(id.best_approximation(3), Matrix::identity(3));
    }

    #[test]
    fn identity_covariances_give_identity_l() {
        let x0 = data(&[&[1.0, 0.0, 2.0], &[0.0, 1.0, 1.0], &[2.0, 2.0, 0.0], &[1.0, 3.0, 1.0]]);
        let x1 = data(&[&[0.0, 1.0, 2.0], &[1.0, 1.0, 0.5], &[2.0, 0.0, 0.0], &[3.0, 1.0, 1.0]]);
        let s0 = center_scale(&x0, DEFAULT_RANK_TOL).unwrap();
        let s1 = center_scale(&x1, DEFAULT_RANK_TOL).unwrap();
        let id = PrescribedCovariance::identity(2);
        let (l, r) = build_lr(&id, &id, &s0, &s1).unwrap();
        assert_eq!(l, Matrix::identity(2));
        assert_eq!(r.shape(), (s0.rank(), s1.rank()));
        let (_, self_r) = build_lr(&id, &id, &s0, &s0).unwrap();
        assert!((&self_r - &Matrix::identity(s0.rank())).frobenius_norm() < 1e-12);
        assert!(build_lr(&id, &PrescribedCovariance::identity(3), &s0, &s1).is_err());
    }

    #[test]
    fn all_identity_map() {
        // S = I_2 padded: data columns +-e_1, +-e_2 scaled so that S S^T = I.
        let x = data(&[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0], &[0.0, -1.0]]);
        let st = center_scale(&x, DEFAULT_RANK_TOL).unwrap();
        let id = PrescribedCovariance::identity(2);
        let d = Matrix::identity(2);
        let map = assemble_map(&id, &st, &d, &st.mean).unwrap();
        // sigma_S = sqrt(2/3) for both directions.
        let expect = sqrt(1.5);
        assert!((&map.a - &Matrix::identity(2).scale(expect)).frobenius_norm() < 1e-12);
        assert!(map.b.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn assemble_map_errors() {
        let constant = data(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let st = center_scale(&constant, DEFAULT_RANK_TOL).unwrap();
        let id = PrescribedCovariance::identity(2);
        assert!(matches!(
            assemble_map(&id, &st, &Matrix::zeros(0, 0), &st.mean),
            Err(Error::ZeroRankData)
        ));
        let x = data(&[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0]]);
        let st = center_scale(&x, DEFAULT_RANK_TOL).unwrap();
        assert!(assemble_map(&id, &st, &Matrix::identity(3), &st.mean).is_err());
    }

    #[test]
    fn train_rejects_bad_inputs() {
        let x = data(&[&[1.0, 0.0], &[-1.0, 0.5], &[0.0, 1.0]]);
        let y = data(&[&[1.0, 0.0], &[-1.0, 0.5]]);
        let c = constant_like(&x);
        let id = PrescribedCovariance::identity(1);
        let cfg = SgmConfig::new(1, vec![1.0]);
        assert!(matches!(
            train(&[x.clone(), y], &[id.clone(), id.clone()], &cfg),
            Err(Error::SampleCount { modality: 1, .. })
        ));
        assert!(matches!(
            train(&[x.clone(), c], &[id.clone(), id.clone()], &cfg),
            Err(Error::DegenerateData { modality: 1 })
        ));
        assert!(matches!(
            train(&[x.clone(), x.clone()], &[id.clone(), id.clone()], &SgmConfig::new(1, vec![0.7])),
            Err(Error::WeightSum { .. })
        ));
        assert!(matches!(
            train(
                &[x.clone(), x.clone()],
                &[id.clone(), PrescribedCovariance::identity(2)],
                &cfg
            ),
            Err(Error::CovarianceDimension { index: 1, .. })
        ));
        assert!(train(core::slice::from_ref(&x), core::slice::from_ref(&id), &SgmConfig::new(1, vec![])).is_err());
    }

    fn constant_like(x: &ModalityData) -> ModalityData {
        let cols: Vec<Vec<f64>> = (0..x.count()).map(|_| vec![2.0; x.dim()]).collect();
        ModalityData::from_columns(&cols).unwrap()
    }

    #[test]
    fn apply_checks_index_and_length() {
        let x = data(&[&[1.0, 0.0], &[-1.0, 0.5], &[0.0, 1.0]]);
        let id = PrescribedCovariance::identity(1);
        let model = train(&[x.clone(), x.clone()], &[id.clone(), id], &SgmConfig::new(1, vec![1.0]))
            .unwrap();
        assert!(matches!(model.apply(2, &[0.0, 0.0]), Err(Error::ModalityIndex { .. })));
        assert!(model.apply(0, &[0.0]).is_err());
        let mean = [0.0, 0.5];
        let y = model.apply(1, &mean).unwrap();
        assert!(y[0].abs() < 1e-12);
    }
}
