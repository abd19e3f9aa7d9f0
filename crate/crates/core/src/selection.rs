//! Tuning-parameter selection: elbow rules for the basis dimensions and
//! cross-validated BIC over `(s, α, τ1, τ2)`.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_eval::select_edges;
use crate::init::{canonical_correlations, initialize, InitMethod};
use crate::model::{FitConfig, GraphEstimate, ModelParams, ScoreBundle};
use crate::objective::residuals;
use crate::solver::fit;
use crate::synth::keyed_rng;

/// Candidate with the largest discrete second difference
/// `r[j−1] − 2r[j] + r[j+1]` of the residual curve. Returns the first
/// candidate when no point bends upward.
pub fn elbow_from_residuals(candidates: &[usize], residuals: &[f64]) -> Result<usize> {
    if candidates.len() < 3 {
        return Err(Error::TooFewCandidates(candidates.len()));
    }
    if residuals.len() != candidates.len() {
        return Err(Error::dims(format!(
            "{} residuals for {} candidates",
            residuals.len(),
            candidates.len()
        )));
    }
    let scale = residuals.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let mut best = None;
    let mut best_val = 1e-12 * scale;
    for j in 1..residuals.len() - 1 {
        let d = residuals[j - 1] - 2.0 * residuals[j] + residuals[j + 1];
        if d > best_val {
            best_val = d;
            best = Some(j);
        }
    }
    Ok(best.map_or(candidates[0], |j| candidates[j]))
}

/// Mean squared reconstruction error of modality `m` when only the first
/// `k` scores of every node are kept, for each candidate `k`.
pub fn score_residuals(data: &ScoreBundle, m: usize, candidates: &[usize]) -> Result<Vec<f64>> {
    let km = data.k_m()[m];
    if let Some(&c) = candidates.iter().find(|&&c| c > km) {
        return Err(Error::invalid("candidates", format!("{c} exceeds the basis dimension {km}")));
    }
    let n = data.n_samples().max(1) as f64;
    let p = data.p() as f64;
    let energy: Vec<f64> = (0..km)
        .map(|l| {
            (0..data.p())
                .map(|i| data.node(m, i).row(l).norm_squared())
                .sum::<f64>()
                / (n * p)
        })
        .collect();
    Ok(candidates.iter().map(|&k| energy[k..].iter().sum()).collect())
}

/// Elbow of the score-truncation residual curve, per modality.
pub fn elbow_k_m(data: &ScoreBundle, candidates: &[usize]) -> Result<Vec<usize>> {
    if candidates.len() < 3 {
        return Err(Error::TooFewCandidates(candidates.len()));
    }
    if candidates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("candidates", "must be strictly increasing"));
    }
    (0..data.modalities())
        .map(|m| elbow_from_residuals(candidates, &score_residuals(data, m, candidates)?))
        .collect()
}

/// Index before the largest drop between consecutive values, 1-based; ties
/// go to the smaller index.
pub fn largest_drop(spectrum: &[f64]) -> usize {
    let mut best = 0;
    let mut best_drop = f64::NEG_INFINITY;
    for j in 0..spectrum.len().saturating_sub(1) {
        let drop = spectrum[j] - spectrum[j + 1];
        if drop > best_drop {
            best_drop = drop;
            best = j;
        }
    }
    best + 1
}

/// Latent dimension from the canonical correlations at the first node: the
/// position just before the largest drop, looking at most at `k_max`.
pub fn elbow_k(data: &ScoreBundle, k_max: usize) -> Result<usize> {
    let kmin = data.k_m().iter().copied().min().unwrap_or(0);
    if k_max == 0 || k_max > kmin {
        return Err(Error::invalid("k_max", format!("must lie in 1..={kmin}")));
    }
    let spectrum = canonical_correlations(data, 0)?;
    let len = (k_max + 1).min(spectrum.len());
    Ok(largest_drop(&spectrum[..len]))
}

/// Ridge added to each residual Gram matrix before the log-determinant.
fn ridge(signal: &DMatrix<f64>, k: usize) -> f64 {
    let tr = signal.norm_squared() / k as f64;
    if tr > 0.0 {
        1e-8 * tr
    } else {
        1e-8
    }
}

/// `Σ_i {Σ_m N·log det((1/2N)(G_i^m G_i^mᵀ + δI)) + |N̂_i|·log N}`.
///
/// `δ` is `1e-8` times the mean diagonal of the node's latent signal Gram
/// matrix `A^m Y_i Y_iᵀ A^mᵀ`, so exact fits stay finite.
pub fn bic_score(data: &ScoreBundle, params: &ModelParams, edges: &GraphEstimate) -> Result<f64> {
    if edges.p != data.p() {
        return Err(Error::dims("edge set and data have different node counts"));
    }
    let n = data.n_samples() as f64;
    let k = params.k();
    let mut total = 0.0;
    for m in 0..data.modalities() {
        let res = residuals(params, data, m)?;
        for (i, g) in res.iter().enumerate() {
            let signal = &params.a_mats[m] * data.node(m, i);
            let delta = ridge(&signal, k);
            let mut gram = g * g.transpose();
            for d in 0..k {
                gram[(d, d)] += delta;
            }
            gram /= 2.0 * n;
            let chol = gram
                .cholesky()
                .ok_or(Error::NotPositiveDefinite { min_eig: f64::NAN, floor: 0.0 })?;
            let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
            total += n * logdet;
        }
    }
    for i in 0..data.p() {
        total += edges.degree(i) as f64 * n.ln();
    }
    Ok(total)
}

/// Disjoint folds covering `0..n`, sizes differing by at most one.
pub fn fold_partition(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > n {
        return Err(Error::invalid("folds", format!("must lie in 2..={n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut keyed_rng(seed, 0xf01d, 0));
    let mut out = vec![Vec::new(); folds];
    for (pos, idx) in order.into_iter().enumerate() {
        out[pos % folds].push(idx);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

/// Candidate values for each tuned parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub s: Vec<usize>,
    pub alpha: Vec<f64>,
    pub tau1: Vec<f64>,
    pub tau2: Vec<f64>,
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub s: usize,
    pub alpha: f64,
    pub tau1: f64,
    pub tau2: f64,
}

impl GridPoint {
    pub fn apply(&self, base: &FitConfig) -> FitConfig {
        FitConfig {
            s: self.s,
            alpha: self.alpha,
            tau1: self.tau1,
            tau2: self.tau2,
            ..base.clone()
        }
    }

    fn order(&self, other: &Self) -> std::cmp::Ordering {
        self.s
            .cmp(&other.s)
            .then(self.alpha.total_cmp(&other.alpha))
            .then(self.tau1.total_cmp(&other.tau1))
            .then(self.tau2.total_cmp(&other.tau2))
    }
}

impl Grid {
    /// Every combination, ordered by `s`, then `α`, then `τ1`, then `τ2`.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut pts = Vec::new();
        for &s in &self.s {
            for &alpha in &self.alpha {
                for &tau1 in &self.tau1 {
                    for &tau2 in &self.tau2 {
                        pts.push(GridPoint { s, alpha, tau1, tau2 });
                    }
                }
            }
        }
        pts.sort_by(GridPoint::order);
        pts
    }
}

/// Outcome of [`select_params`].
#[derive(Debug, Clone)]
pub struct Selection {
    pub config: FitConfig,
    pub point: GridPoint,
    /// Mean validation BIC per grid point; `None` where a fold failed.
    pub scores: Vec<(GridPoint, Option<f64>)>,
}

/// Options shared by every grid point of [`select_params`].
#[derive(Debug, Clone)]
pub struct CvOptions {
    pub k: usize,
    pub folds: usize,
    pub seed: u64,
    pub init: InitMethod,
    pub base: FitConfig,
}

fn score_point(data: &ScoreBundle, folds: &[Vec<usize>], point: &GridPoint, opts: &CvOptions) -> Result<f64> {
    let cfg = point.apply(&opts.base);
    cfg.validate_for(data.p(), opts.k)?;
    let mut total = 0.0;
    for (f, valid) in folds.iter().enumerate() {
        let train: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        let train_data = data.select_samples(&train);
        let init = initialize(&train_data, opts.k, opts.init, &cfg)?;
        let (params, _) = fit(&train_data, &init, &cfg)?;
        let edges = select_edges(&params, cfg.eps0, cfg.edge_rule);
        total += bic_score(&data.select_samples(valid), &params, &edges)?;
    }
    Ok(total / folds.len() as f64)
}

/// Cross-validated BIC selection over `grid`.
///
/// Each grid point is fit on the training folds and scored on the held-out
/// fold; the point with the lowest mean score wins, ties going to the first
/// point in [`Grid::points`] order. Points with a failing fold are dropped
/// with a warning.
pub fn select_params(data: &ScoreBundle, grid: &Grid, opts: &CvOptions) -> Result<Selection> {
    let points = grid.points();
    if points.is_empty() {
        return Err(Error::invalid("grid", "every parameter needs at least one value"));
    }
    let folds = fold_partition(data.n_samples(), opts.folds, opts.seed)?;
    let scores: Vec<(GridPoint, Option<f64>)> = points
        .par_iter()
        .map(|pt| match score_point(data, &folds, pt, opts) {
            Ok(v) if v.is_finite() => (*pt, Some(v)),
            Ok(v) => {
                log::warn!("grid point {pt:?} excluded: non-finite score {v}");
                (*pt, None)
            }
            Err(e) => {
                log::warn!("grid point {pt:?} excluded: {e}");
                (*pt, None)
            }
        })
        .collect();
    let mut best: Option<(GridPoint, f64)> = None;
    for (pt, score) in &scores {
        if let Some(v) = score {
            if best.is_none_or(|(_, b)| *v < b) {
                best = Some((*pt, *v));
            }
        }
    }
    let (point, _) = best.ok_or(Error::AllGridPointsFailed)?;
    Ok(Selection {
        config: point.apply(&opts.base),
        point,
        scores,
    })
}
