//! Small dense linear-algebra helpers shared by the estimator, classifier and
//! kernel modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance used when comparing scores for ties.
pub const TIE_TOL: f64 = 1e-12;

/// Rank tolerance for span and dimension tests.
pub const RANK_TOL: f64 = 1e-7;

/// Largest singular value.
pub fn operator_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

/// `log det` of a symmetric positive-definite matrix via Cholesky.
pub fn spd_logdet(m: &DMatrix<f64>) -> Result<f64> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))?;
    Ok(2.0
        * chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|v| v.ln())
            .sum::<f64>())
}

/// Numerical rank of the matrix whose columns are `cols`.
pub fn rank_of_columns(cols: &[DVector<f64>], dim: usize) -> usize {
    if cols.is_empty() {
        return 0;
    }
    let m = DMatrix::from_columns(cols);
    debug_assert_eq!(m.nrows(), dim);
    let sv = m.svd(false, false).singular_values;
    let scale = sv.iter().fold(0.0_f64, |acc, &s| acc.max(s)).max(1.0);
    sv.iter().filter(|&&s| s > RANK_TOL * scale).count()
}

/// Minimum-norm least-squares solution of `b w = target`.
///
/// Returns the coefficients and the residual norm `|b w - target|`.
pub fn least_norm_solve(b: &DMatrix<f64>, target: &DVector<f64>) -> (DVector<f64>, f64) {
    if b.ncols() == 0 {
        return (DVector::zeros(0), target.norm());
    }
    let svd = b.clone().svd(true, true);
    let smax = svd
        .singular_values
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s));
    let eps = 1e-12 * smax.max(1.0);
    let w = svd
        .solve(target, eps)
        .unwrap_or_else(|_| DVector::zeros(b.ncols()));
    let residual = (b * &w - target).norm();
    (w, residual)
}

/// Whether `v` lies in the column span of `b`, using a residual threshold
/// relative to `|v|`.
pub fn in_column_span(b: &DMatrix<f64>, v: &DVector<f64>) -> bool {
    let norm = v.norm();
    if norm == 0.0 {
        return true;
    }
    let (_, residual) = least_norm_solve(b, v);
    residual < RANK_TOL * norm
}

/// Concatenates matrices with equal row counts side by side.
pub fn hstack(blocks: &[&DMatrix<f64>], rows: usize) -> DMatrix<f64> {
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}

fn within_tie(a: f64, best: f64) -> bool {
    (a - best).abs() <= TIE_TOL * best.abs().max(1.0)
}

/// Index of the largest value; near-ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .position(|&v| v == best || within_tie(v, best))
        .unwrap_or(0)
}

/// Index of the smallest value; near-ties resolve to the lowest index.
pub fn argmin(values: &[f64]) -> usize {
    let best = values.iter().cloned().fold(f64::INFINITY, f64::min);
    values
        .iter()
        .position(|&v| v == best || within_tie(v, best))
        .unwrap_or(0)
}
