//! Weighted semi-orthogonal trace maximization.
//!
//! Given matrices `L_i`, `R_i` and weights `lambda_i` (`i = 1..m`), the
//! problem is to maximize
//!
//! ```text
//! f(Q_0, ..., Q_m) = sum_i lambda_i tr(Q_i^T L_i^T Q_0 R_i)
//! ```
//!
//! over `Q_0` (`rows_L x rows_R`) and `Q_i` (`cols(L_i) x cols(R_i)`), all
//! with orthonormal rows. [`solve_related`] computes a closed-form feasible
//! point: each `Q_i` solves its own two-sided Procrustes problem, then `Q_0`
//! solves the one-sided problem `max tr(Q_0 H)` for the resulting
//! `H = sum_i lambda_i R_i Q_i^T L_i^T`. [`refine`] improves any feasible
//! point by negating rows of the `Q_i` whose contribution is negative and
//! re-solving for `Q_0`, which never lowers `f`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{full_svd_with_tol, Matrix, DEFAULT_RANK_TOL};

/// Tolerance on `sum(weights) == 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Rows are negated only when their contribution is below `-FLIP_TOL`.
pub const FLIP_TOL: f64 = 1e-12;
/// Feasibility tolerance on `Q Q^T = I`.
pub const FEASIBILITY_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_OUTER_ITERS: usize = 100;

/// Checks `m` weights are non-negative and sum to one.
pub fn validate_weights(weights: &[f64], m: usize) -> Result<()> {
    if weights.len() != m {
        return Err(Error::WeightCount {
            expected: m,
            found: weights.len(),
        });
    }
    for (index, &value) in weights.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite("weights"));
        }
        if value < 0.0 {
            return Err(Error::NegativeWeight { index, value });
        }
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::WeightSum { sum });
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ProcrustesInstance {
    l: Vec<Matrix>,
    r: Vec<Matrix>,
    weights: Vec<f64>,
}

impl ProcrustesInstance {
    /// Validates shapes (`rows(L_i)` common, `rows(R_i)` common,
    /// `rows_L <= rows_R`, `cols(L_i) <= cols(R_i)`) and weights.
    pub fn new(l: Vec<Matrix>, r: Vec<Matrix>, weights: Vec<f64>) -> Result<Self> {
        let m = l.len();
        if m == 0 {
            return Err(Error::InvalidArgument("at least one (L, R) pair is required".into()));
        }
        if r.len() != m {
            return Err(Error::Infeasible(format!("{m} L matrices but {} R matrices", r.len())));
        }
        validate_weights(&weights, m)?;
        let rows_l = l[0].rows();
        let rows_r = r[0].rows();
        if rows_l > rows_r {
            return Err(Error::Infeasible(format!("rows_L = {rows_l} > rows_R = {rows_r}")));
        }
        for (i, (li, ri)) in l.iter().zip(&r).enumerate() {
            if li.rows() != rows_l || ri.rows() != rows_r {
                return Err(Error::Infeasible(format!(
                    "pair {i}: L is {:?}, R is {:?}, expected {rows_l} and {rows_r} rows",
                    li.shape(),
                    ri.shape()
                )));
            }
            if li.cols() > ri.cols() {
                return Err(Error::Infeasible(format!(
                    "pair {i}: cols(L) = {} > cols(R) = {}",
                    li.cols(),
                    ri.cols()
                )));
            }
            if !li.is_finite() || !ri.is_finite() {
                return Err(Error::NonFinite("procrustes instance"));
            }
        }
        Ok(Self { l, r, weights })
    }

    pub fn m(&self) -> usize {
        self.l.len()
    }

    pub fn rows_l(&self) -> usize {
        self.l[0].rows()
    }

    pub fn rows_r(&self) -> usize {
        self.r[0].rows()
    }

    pub fn l(&self) -> &[Matrix] {
        &self.l
    }

    pub fn r(&self) -> &[Matrix] {
        &self.r
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `(Q_0, Q_1, ..., Q_m)`, each with orthonormal rows.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibleTuple {
    pub q0: Matrix,
    pub qi: Vec<Matrix>,
}

impl FeasibleTuple {
    /// Largest deviation of any `Q Q^T` from the identity.
    pub fn feasibility_residual(&self) -> f64 {
        self.qi
            .iter()
            .map(Matrix::row_orthonormality_residual)
            .fold(self.q0.row_orthonormality_residual(), f64::max)
    }

    /// Shape and orthonormality check against `inst`.
    pub fn check(&self, inst: &ProcrustesInstance) -> Result<()> {
        self.check_shapes(inst)?;
        let res = self.feasibility_residual();
        if !(res <= FEASIBILITY_TOL) {
            return Err(Error::Infeasible(format!("orthonormality residual {res:e}")));
        }
        Ok(())
    }

    fn check_shapes(&self, inst: &ProcrustesInstance) -> Result<()> {
        if self.q0.shape() != (inst.rows_l(), inst.rows_r()) {
            return Err(Error::Infeasible(format!(
                "Q_0 is {:?}, expected {:?}",
                self.q0.shape(),
                (inst.rows_l(), inst.rows_r())
            )));
        }
        if self.qi.len() != inst.m() {
            return Err(Error::Infeasible(format!(
                "{} Q_i for {} pairs",
                self.qi.len(),
                inst.m()
            )));
        }
        for (i, q) in self.qi.iter().enumerate() {
            let want = (inst.l[i].cols(), inst.r[i].cols());
            if q.shape() != want {
                return Err(Error::Infeasible(format!(
                    "Q_{} is {:?}, expected {want:?}",
                    i + 1,
                    q.shape()
                )));
            }
        }
        Ok(())
    }
}

/// `L_i^T Q_0 R_i`, shaped like `Q_i`.
fn pair_product(q0: &Matrix, l: &Matrix, r: &Matrix) -> Matrix {
    &(&l.transpose() * q0) * r
}

/// `sum_i lambda_i tr(Q_i^T L_i^T Q_0 R_i)`.
pub fn objective(tuple: &FeasibleTuple, inst: &ProcrustesInstance) -> Result<f64> {
    tuple.check_shapes(inst)?;
    Ok(objective_unchecked(tuple, inst))
}

fn objective_unchecked(tuple: &FeasibleTuple, inst: &ProcrustesInstance) -> f64 {
    tuple
        .qi
        .iter()
        .zip(inst.l.iter().zip(&inst.r))
        .zip(&inst.weights)
        .map(|((q, (l, r)), w)| w * q.frobenius_inner(&pair_product(&tuple.q0, l, r)))
        .sum()
}

/// `H = sum_i lambda_i R_i Q_i^T L_i^T` (`rows_R x rows_L`).
pub fn compute_h(tuple: &FeasibleTuple, inst: &ProcrustesInstance) -> Result<Matrix> {
    if tuple.qi.len() != inst.m() {
        return Err(Error::Infeasible(format!(
            "{} Q_i for {} pairs",
            tuple.qi.len(),
            inst.m()
        )));
    }
    for (i, q) in tuple.qi.iter().enumerate() {
        if q.shape() != (inst.l[i].cols(), inst.r[i].cols()) {
            return Err(Error::Infeasible(format!("Q_{} has shape {:?}", i + 1, q.shape())));
        }
    }
    Ok(h_unchecked(&tuple.qi, inst))
}

fn h_unchecked(qi: &[Matrix], inst: &ProcrustesInstance) -> Matrix {
    let mut h = Matrix::zeros(inst.rows_r(), inst.rows_l());
    for ((q, (l, r)), &w) in qi.iter().zip(inst.l.iter().zip(&inst.r)).zip(&inst.weights) {
        let term = &(r * &q.transpose()) * &l.transpose();
        h = &h + &term.scale(w);
    }
    h
}

/// Maximizer of `tr(Q_0 H)` over `rows_L x rows_R` matrices with orthonormal
/// rows: `V_H (U_H)[:, :rows_L]^T` from the full SVD of `H`.
fn best_q0(h: &Matrix, rows_l: usize) -> Matrix {
    let svd = full_svd_with_tol(h, DEFAULT_RANK_TOL).expect("H is finite");
    &svd.v_bar * &svd.u_bar.leading_columns(rows_l).transpose()
}

/// Closed-form feasible point: per-pair two-sided Procrustes solutions
/// `Q_i = V_{L_i} ((V_{R_i})[:, :cols(L_i)])^T`, then `Q_0` optimal for them.
pub fn solve_related(inst: &ProcrustesInstance) -> FeasibleTuple {
    let qi: Vec<Matrix> = inst
        .l
        .iter()
        .zip(&inst.r)
        .map(|(l, r)| {
            let vl = full_svd_with_tol(l, DEFAULT_RANK_TOL).expect("L is finite").v_bar;
            let vr = full_svd_with_tol(r, DEFAULT_RANK_TOL).expect("R is finite").v_bar;
            &vl * &vr.leading_columns(l.cols()).transpose()
        })
        .collect();
    let h = h_unchecked(&qi, inst);
    FeasibleTuple {
        q0: best_q0(&h, inst.rows_l()),
        qi,
    }
}

/// Result of [`refine`].
#[derive(Clone, Debug)]
pub struct Refinement {
    pub tuple: FeasibleTuple,
    /// Outer passes executed.
    pub iterations: usize,
    /// Total rows negated.
    pub flips: usize,
    /// `false` when the pass cap was reached while rows were still being flipped.
    pub converged: bool,
    /// Objective at the start and after every pass.
    pub objective_history: Vec<f64>,
}

/// Row sign-flip refinement. Each pass negates every row `j` of every `Q_i`
/// with `row_j(L_i^T Q_0 R_i) . row_j(Q_i) < -FLIP_TOL`; if anything flipped,
/// `Q_0` is re-solved for the new `H`. Stops after a pass with no flips or
/// after `max_outer_iters` passes.
pub fn refine(
    tuple: &FeasibleTuple,
    inst: &ProcrustesInstance,
    max_outer_iters: usize,
) -> Result<Refinement> {
    if max_outer_iters == 0 {
        return Err(Error::InvalidArgument("max_outer_iters must be at least 1".into()));
    }
    tuple.check(inst)?;
    let mut current = tuple.clone();
    let mut history = Vec::with_capacity(4);
    history.push(objective_unchecked(&current, inst));
    let mut iterations = 0;
    let mut flips = 0;
    let mut converged = false;

    while iterations < max_outer_iters {
        iterations += 1;
        let mut count = 0;
        for (i, q) in current.qi.iter_mut().enumerate() {
            let p = pair_product(&current.q0, &inst.l[i], &inst.r[i]);
            for j in 0..q.rows() {
                let dot: f64 = p.row(j).iter().zip(q.row(j)).map(|(a, b)| a * b).sum();
                if dot < -FLIP_TOL {
                    q.row_mut(j).iter_mut().for_each(|x| *x = -*x);
                    count += 1;
                }
            }
        }
        if count == 0 {
            converged = true;
            history.push(*history.last().unwrap());
            break;
        }
        flips += count;
        let h = h_unchecked(&current.qi, inst);
        current.q0 = best_q0(&h, inst.rows_l());
        history.push(objective_unchecked(&current, inst));
    }

    Ok(Refinement {
        tuple: current,
        iterations,
        flips,
        converged,
        objective_history: history,
    })
}
