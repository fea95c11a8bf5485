//! Sequentially thresholded ridge regression and support-selection metrics.
//!
//! Solves operate on columns and target rescaled to unit root-mean-square, so
//! `lambda` and `tol` are dimensionless; reported coefficients are in the
//! original units of the problem.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dictionary::RegressionProblem;
use crate::error::{Error, Result};

/// Candidate thresholds searched when `tol_search` is set.
pub const TOL_GRID: [f64; 4] = [1e-3, 1e-2, 1e-1, 1.0];

/// Every `VALIDATION_STRIDE`-th row is held out when searching `tol`.
const VALIDATION_STRIDE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StridgeConfig {
    pub lambda: f64,
    pub tol: f64,
    pub max_iters: usize,
    /// Pick `tol` from [`TOL_GRID`] by held-out residual plus `l0_penalty`
    /// per retained term, instead of using `tol` directly.
    pub tol_search: bool,
    pub l0_penalty: f64,
}

impl Default for StridgeConfig {
    fn default() -> Self {
        StridgeConfig {
            lambda: 1e-5,
            tol: 0.1,
            max_iters: 25,
            tol_search: true,
            l0_penalty: 1e-3,
        }
    }
}

impl StridgeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("stridge.lambda = {} must be >= 0", self.lambda)));
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!("stridge.tol = {} must be >= 0", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("stridge.max_iters must be at least 1".into()));
        }
        if self.l0_penalty.is_nan() || self.l0_penalty < 0.0 {
            return Err(Error::Config("stridge.l0_penalty must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StridgeFit {
    /// Coefficients in original units, zero off the support.
    pub coefficients: DVector<f64>,
    pub support: Vec<usize>,
    /// Threshold actually used.
    pub tol: f64,
}

/// Ridge solution of `(D'D / N + lambda I) beta = D'Y / N` on the given columns.
///
/// The normal equations are scaled by `1/N`, so for unit-RMS columns `lambda`
/// is relative to a unit diagonal.
pub fn ridge(matrix: &DMatrix<f64>, target: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let n = matrix.nrows().max(1) as f64;
    let k = matrix.ncols();
    if k == 0 {
        return Ok(DVector::zeros(0));
    }
    let mut gram = matrix.tr_mul(matrix) / n;
    for i in 0..k {
        gram[(i, i)] += lambda;
    }
    let rhs = matrix.tr_mul(target) / n;
    solve_spd(gram, &rhs)
}

/// Cholesky solve that rejects numerically singular matrices.
pub(crate) fn solve_spd(a: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let scale = a.diagonal().amax().max(f64::MIN_POSITIVE);
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("normal equations are not positive definite".into()))?;
    let min_pivot = chol
        .l_dirty()
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |m, v| m.min(v * v));
    if min_pivot <= 1e-13 * scale {
        return Err(Error::SingularSystem(format!("pivot {min_pivot:e} below tolerance")));
    }
    Ok(chol.solve(rhs))
}

/// STRidge on a problem whose columns are already on a common scale.
fn stridge_scaled(
    matrix: &DMatrix<f64>,
    target: &DVector<f64>,
    lambda: f64,
    tol: f64,
    max_iters: usize,
) -> Result<(DVector<f64>, Vec<usize>)> {
    let k = matrix.ncols();
    let mut active: Vec<usize> = (0..k).collect();
    let mut beta = DVector::zeros(k);
    for _ in 0..max_iters {
        let sub = ridge(&matrix.select_columns(&active), target, lambda)?;
        beta.fill(0.0);
        for (j, &c) in active.iter().enumerate() {
            beta[c] = sub[j];
        }
        let kept: Vec<usize> = active.iter().copied().filter(|&c| beta[c].abs() >= tol).collect();
        if kept.len() == active.len() {
            break;
        }
        active = kept;
        if active.is_empty() {
            beta.fill(0.0);
            break;
        }
    }
    Ok((beta, active))
}

/// Sequentially thresholded ridge regression.
pub fn stridge(problem: &RegressionProblem, config: &StridgeConfig) -> Result<StridgeFit> {
    config.validate()?;
    let (scaled, scaling) = problem.standardized();
    let matrix = &scaled.dictionary.matrix;
    let target = &scaled.target;
    let tol = if config.tol_search {
        search_tol(matrix, target, config)?
    } else {
        config.tol
    };
    let (beta, support) = stridge_scaled(matrix, target, config.lambda, tol, config.max_iters)?;
    Ok(StridgeFit {
        coefficients: scaling.unscale_vector(&beta),
        support,
        tol,
    })
}

fn search_tol(matrix: &DMatrix<f64>, target: &DVector<f64>, config: &StridgeConfig) -> Result<f64> {
    let n = matrix.nrows();
    let (train, valid): (Vec<usize>, Vec<usize>) = (0..n).partition(|i| i % VALIDATION_STRIDE != VALIDATION_STRIDE - 1);
    if valid.is_empty() || train.is_empty() {
        return Ok(config.tol);
    }
    let (dt, yt) = (matrix.select_rows(&train), target.select_rows(&train));
    let (dv, yv) = (matrix.select_rows(&valid), target.select_rows(&valid));
    let yv_norm = yv.norm_squared().max(f64::MIN_POSITIVE);
    let mut best: Option<(f64, f64)> = None;
    // sparsest first so ties keep the larger threshold
    for &tol in TOL_GRID.iter().rev() {
        let (beta, support) = stridge_scaled(&dt, &yt, config.lambda, tol, config.max_iters)?;
        let resid = (&yv - &dv * &beta).norm_squared() / yv_norm;
        let score = resid + config.l0_penalty * support.len() as f64;
        if best.is_none_or(|(s, _)| score < s) {
            best = Some((score, tol));
        }
    }
    Ok(best.map_or(config.tol, |(_, t)| t))
}

/// `|support \ truth| / k`.
pub fn false_positive_rate(support: &[usize], truth: &[usize], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let truth: BTreeSet<usize> = truth.iter().copied().collect();
    let spurious = support
        .iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter(|i| !truth.contains(i))
        .count();
    spurious as f64 / k as f64
}

/// `|truth \ support| / |truth|`.
pub fn false_negative_rate(support: &[usize], truth: &[usize]) -> f64 {
    let truth: BTreeSet<usize> = truth.iter().copied().collect();
    if truth.is_empty() {
        return 0.0;
    }
    let support: BTreeSet<usize> = support.iter().copied().collect();
    truth.difference(&support).count() as f64 / truth.len() as f64
}
