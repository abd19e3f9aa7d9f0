//! Least-squares projection of discretely sampled curves onto a basis.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::selection::elbow_from_residuals;

/// A finite family of functions on the real line.
pub trait Basis {
    /// Number of functions.
    fn len(&self) -> usize;

    /// Value of function `l` (0-based) at `t`.
    fn eval(&self, l: usize, t: f64) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Orthonormal Fourier basis on `[start, end]`: a constant followed by
/// alternating sines and cosines of increasing frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierBasis {
    pub k: usize,
    pub start: f64,
    pub end: f64,
}

impl FourierBasis {
    pub fn new(k: usize, start: f64, end: f64) -> Self {
        FourierBasis { k, start, end }
    }

    /// `k` functions on the unit interval.
    pub fn unit(k: usize) -> Self {
        Self::new(k, 0.0, 1.0)
    }
}

impl Basis for FourierBasis {
    fn len(&self) -> usize {
        self.k
    }

    fn eval(&self, l: usize, t: f64) -> f64 {
        let width = self.end - self.start;
        let x = (t - self.start) / width;
        if l == 0 {
            return 1.0 / width.sqrt();
        }
        let freq = l.div_ceil(2) as f64;
        let arg = 2.0 * std::f64::consts::PI * freq * x;
        let norm = (2.0 / width).sqrt();
        if l % 2 == 1 {
            norm * arg.sin()
        } else {
            norm * arg.cos()
        }
    }
}

/// Any `Fn(l, t)` with a declared size.
pub struct FnBasis<F> {
    k: usize,
    f: F,
}

impl<F: Fn(usize, f64) -> f64> FnBasis<F> {
    pub fn new(k: usize, f: F) -> Self {
        FnBasis { k, f }
    }
}

impl<F: Fn(usize, f64) -> f64> Basis for FnBasis<F> {
    fn len(&self) -> usize {
        self.k
    }

    fn eval(&self, l: usize, t: f64) -> f64 {
        (self.f)(l, t)
    }
}

/// `C[j, l] = φ_l(t_j)`.
pub fn design_matrix(time_points: &[f64], basis: &impl Basis) -> DMatrix<f64> {
    DMatrix::from_fn(time_points.len(), basis.len(), |j, l| basis.eval(l, time_points[j]))
}

// relative pivot below which the Gram matrix counts as singular
const PIVOT_FLOOR: f64 = 1e-12;

fn normal_equations(design: &DMatrix<f64>, values: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gram = design.transpose() * design;
    let scale = gram.diagonal().max();
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("basis evaluations are collinear".into()))?;
    let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |a, &d| a.min(d * d));
    if !(scale > 0.0) || min_pivot < PIVOT_FLOOR * scale {
        return Err(Error::RankDeficient("basis evaluations are collinear".into()));
    }
    Ok(chol.solve(&(design.transpose() * values)))
}

/// Basis coefficients of each column of `curve_values` (q × N) sampled at
/// `time_points`, by ordinary least squares.
pub fn project_scores(curve_values: &DMatrix<f64>, time_points: &[f64], basis: &impl Basis) -> Result<DMatrix<f64>> {
    if curve_values.nrows() != time_points.len() {
        return Err(Error::dims(format!(
            "{} curve rows for {} time points",
            curve_values.nrows(),
            time_points.len()
        )));
    }
    if time_points.len() < basis.len() {
        return Err(Error::RankDeficient(format!(
            "{} time points cannot determine {} coefficients",
            time_points.len(),
            basis.len()
        )));
    }
    normal_equations(&design_matrix(time_points, basis), curve_values)
}

/// Mean squared error of reconstructing the curves from their projection on
/// the first `k` basis functions, for each candidate `k`.
pub fn curve_residuals(
    curve_values: &DMatrix<f64>,
    time_points: &[f64],
    basis: &impl Basis,
    candidates: &[usize],
) -> Result<Vec<f64>> {
    let design = design_matrix(time_points, basis);
    let total = curve_values.len().max(1) as f64;
    candidates
        .iter()
        .map(|&k| {
            if k > basis.len() || k > time_points.len() {
                return Err(Error::invalid("candidates", format!("{k} exceeds the available basis size")));
            }
            if k == 0 {
                return Ok(curve_values.norm_squared() / total);
            }
            let c = design.columns(0, k).into_owned();
            let coef = normal_equations(&c, curve_values)?;
            Ok((curve_values - &c * coef).norm_squared() / total)
        })
        .collect()
}

/// Elbow of [`curve_residuals`] over `candidates`.
pub fn elbow_from_curves(
    curve_values: &DMatrix<f64>,
    time_points: &[f64],
    basis: &impl Basis,
    candidates: &[usize],
) -> Result<usize> {
    if candidates.len() < 3 {
        return Err(Error::TooFewCandidates(candidates.len()));
    }
    elbow_from_residuals(candidates, &curve_residuals(curve_values, time_points, basis, candidates)?)
}
