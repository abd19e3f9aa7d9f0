//! Projection operators used by the solver: block truncation `T_s`,
//! row/column hard thresholding `H_α`, and row-norm clamping `P_{m,τ}`.

use std::cmp::Ordering;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::keep_count;

/// Orders indices by decreasing magnitude, lower index first on ties.
fn by_magnitude(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&x, &y| {
        values[y]
            .partial_cmp(&values[x])
            .unwrap_or(Ordering::Equal)
            .then(x.cmp(&y))
    });
    idx
}

/// Frobenius norm of each k×k block of a k × k(p−1) matrix.
pub fn block_norms(b: &DMatrix<f64>, k: usize) -> Vec<f64> {
    (0..b.ncols() / k).map(|j| b.columns(j * k, k).norm()).collect()
}

/// `T_s`: keeps the `s` blocks of largest Frobenius norm and zeroes the rest.
pub fn truncate_group_sparse(b: &DMatrix<f64>, k: usize, s: usize) -> DMatrix<f64> {
    let norms = block_norms(b, k);
    if s >= norms.len() {
        return b.clone();
    }
    let mut out = b.clone();
    for &j in &by_magnitude(&norms)[s..] {
        out.columns_mut(j * k, k).fill(0.0);
    }
    out
}

/// `H_α` on one square block: entry `(u, v)` survives iff it is among the
/// `⌊αk⌋` largest magnitudes of row `u` and of column `v`.
pub fn hard_threshold_rc(block: &DMatrix<f64>, alpha: f64) -> DMatrix<f64> {
    let k = block.nrows();
    let keep = keep_count(alpha, k);
    if keep >= k {
        return block.clone();
    }
    let mut in_row = DMatrix::from_element(k, k, false);
    let mut in_col = DMatrix::from_element(k, k, false);
    for u in 0..k {
        let mags: Vec<f64> = (0..k).map(|v| block[(u, v)].abs()).collect();
        for &v in &by_magnitude(&mags)[..keep] {
            in_row[(u, v)] = true;
        }
    }
    for v in 0..k {
        let mags: Vec<f64> = (0..k).map(|u| block[(u, v)].abs()).collect();
        for &u in &by_magnitude(&mags)[..keep] {
            in_col[(u, v)] = true;
        }
    }
    DMatrix::from_fn(k, k, |u, v| {
        if in_row[(u, v)] && in_col[(u, v)] {
            block[(u, v)]
        } else {
            0.0
        }
    })
}

/// Applies [`hard_threshold_rc`] to every block of a row of blocks.
pub fn hard_threshold_blocks(b: &DMatrix<f64>, k: usize, alpha: f64) -> DMatrix<f64> {
    if keep_count(alpha, k) >= k {
        return b.clone();
    }
    let mut out = b.clone();
    for j in 0..b.ncols() / k {
        let block = b.columns(j * k, k).into_owned();
        if block.iter().any(|x| *x != 0.0) {
            out.columns_mut(j * k, k).copy_from(&hard_threshold_rc(&block, alpha));
        }
    }
    out
}

/// `H_α ∘ T_s`, the feasibility step applied to every `B_i`.
pub fn project_b(b: &DMatrix<f64>, k: usize, s: usize, alpha: f64) -> DMatrix<f64> {
    hard_threshold_blocks(&truncate_group_sparse(b, k, s), k, alpha)
}

/// Whether `b` has at most `s` nonzero blocks and at most `⌊αk⌋` nonzeros
/// per row and column of each block.
pub fn in_block_constraint_set(b: &DMatrix<f64>, k: usize, s: usize, alpha: f64) -> bool {
    let keep = keep_count(alpha, k);
    let mut nonzero_blocks = 0;
    for j in 0..b.ncols() / k {
        let block = b.columns(j * k, k);
        if block.iter().all(|x| *x == 0.0) {
            continue;
        }
        nonzero_blocks += 1;
        let row_ok = block
            .row_iter()
            .all(|r| r.iter().filter(|x| **x != 0.0).count() <= keep);
        let col_ok = block
            .column_iter()
            .all(|c| c.iter().filter(|x| **x != 0.0).count() <= keep);
        if !(row_ok && col_ok) {
            return false;
        }
    }
    nonzero_blocks <= s
}

/// Relative slack under which a row norm counts as already on a bound.
const NORM_SLACK: f64 = 64.0 * f64::EPSILON;

/// Row-norm interval `[lower, upper]` for one modality's transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowNormBounds {
    pub lower: f64,
    pub upper: f64,
}

impl RowNormBounds {
    /// `lower = √τ1·σ_min0`, `upper = √(τ2/k_m)·σ_max0`.
    pub fn new(tau1: f64, tau2: f64, sigma_min0: f64, sigma_max0: f64, k_m: usize) -> Result<Self> {
        let lower = tau1.sqrt() * sigma_min0;
        let upper = (tau2 / k_m as f64).sqrt() * sigma_max0;
        if !(lower <= upper) {
            return Err(Error::BoundsInfeasible { lower, upper });
        }
        Ok(RowNormBounds { lower, upper })
    }

    /// Bounds derived from the singular values of an initial transform.
    pub fn from_initial(a0: &DMatrix<f64>, tau1: f64, tau2: f64) -> Result<Self> {
        let (smin, smax) = singular_extremes(a0);
        Self::new(tau1, tau2, smin, smax, a0.ncols())
    }

    pub fn contains(&self, norm: f64) -> bool {
        norm >= self.lower * (1.0 - NORM_SLACK) && norm <= self.upper * (1.0 + NORM_SLACK)
    }
}

/// Smallest of the first `min(rows, cols)` singular values, and the largest.
pub fn singular_extremes(a: &DMatrix<f64>) -> (f64, f64) {
    let sv = a.singular_values();
    (sv.min(), sv.max())
}

/// `P_{m,τ}`: clamps each row norm into `[lower, upper]` by radial scaling.
/// A zero row becomes `lower · e_1`.
pub fn project_row_norms(a: &DMatrix<f64>, bounds: &RowNormBounds) -> DMatrix<f64> {
    let mut out = a.clone();
    for mut row in out.row_iter_mut() {
        let norm = row.norm();
        if bounds.contains(norm) {
            continue;
        }
        if norm == 0.0 {
            row[0] = bounds.lower;
        } else if norm < bounds.lower {
            row *= bounds.lower / norm;
        } else {
            row *= bounds.upper / norm;
        }
    }
    out
}
