//! Alternating projected gradient descent over the transforms and the
//! neighborhood blocks.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::init::{initialize, InitMethod};
use crate::matops::{rel_diff, sign_align, SignFlip};
use crate::model::{FitConfig, ModelParams, ScoreBundle};
use crate::objective::{SampleCovariance, Workspace};
use crate::operators::{project_b, project_row_norms, RowNormBounds};

/// One sweep's diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub objective: f64,
    /// Largest relative change over all parameter blocks in this sweep.
    pub max_change: f64,
    /// `(max, sum)` distance to the supplied ground truth.
    pub distance: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitTrace {
    /// Objective at the projected starting point.
    pub initial_objective: f64,
    pub records: Vec<TraceRecord>,
    pub converged: bool,
}

impl FitTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_objective(&self) -> f64 {
        self.records.last().map_or(self.initial_objective, |r| r.objective)
    }
}

/// Row-norm bounds for every modality, frozen from the initial transforms.
pub fn initial_bounds(a0: &[DMatrix<f64>], cfg: &FitConfig) -> Result<Vec<RowNormBounds>> {
    a0.iter()
        .map(|a| RowNormBounds::from_initial(a, cfg.tau1, cfg.tau2))
        .collect()
}

/// Runs the solver from `init` on the sample covariance of `data`.
pub fn fit(data: &ScoreBundle, init: &ModelParams, cfg: &FitConfig) -> Result<(ModelParams, FitTrace)> {
    let cov = SampleCovariance::from_scores(data)?;
    fit_cov(&cov, init, cfg, None)
}

/// [`fit`] recording the distance to `truth` after every sweep.
pub fn fit_with_truth(
    data: &ScoreBundle,
    init: &ModelParams,
    cfg: &FitConfig,
    truth: &ModelParams,
) -> Result<(ModelParams, FitTrace)> {
    let cov = SampleCovariance::from_scores(data)?;
    fit_cov(&cov, init, cfg, Some(truth))
}

/// Solver on an arbitrary covariance (sample or population).
///
/// Each sweep takes a projected gradient step on every `A^m`, then on every
/// `B_i` using the updated transforms. Stops when no block changes by more
/// than `cfg.tol` relative, or after `cfg.max_iter_main` sweeps.
pub fn fit_cov(
    cov: &SampleCovariance,
    init: &ModelParams,
    cfg: &FitConfig,
    truth: Option<&ModelParams>,
) -> Result<(ModelParams, FitTrace)> {
    if init.p() != cov.p() || init.k_m() != cov.k_m() {
        return Err(Error::dims(format!(
            "initial parameters (p = {}, k_m = {:?}) vs data (p = {}, k_m = {:?})",
            init.p(),
            init.k_m(),
            cov.p(),
            cov.k_m()
        )));
    }
    let (k, p) = (init.k(), init.p());
    cfg.validate_for(p, k)?;
    let bounds = initial_bounds(&init.a_mats, cfg)?;

    let mut params = init.clone();
    for (a, bnd) in params.a_mats.iter_mut().zip(&bounds) {
        *a = project_row_norms(a, bnd);
    }
    for b in params.b.iter_mut() {
        *b = project_b(b, k, cfg.s, cfg.alpha);
    }

    let mut ws = Workspace::new(&params.a_mats, cov);
    let f0 = ws.value(&params);
    let limit = 100.0 * f0;
    let mut trace = FitTrace {
        initial_objective: f0,
        ..FitTrace::default()
    };

    for iter in 1..=cfg.max_iter_main {
        let mut max_change: f64 = 0.0;

        let grads: Vec<DMatrix<f64>> = (0..params.modalities()).map(|m| ws.grad_a(&params, m)).collect();
        for ((a, g), bnd) in params.a_mats.iter_mut().zip(grads).zip(&bounds) {
            let next = project_row_norms(&(&*a - g * cfg.eta_a), bnd);
            max_change = max_change.max(rel_diff(&next, a));
            *a = next;
        }
        ws = Workspace::new(&params.a_mats, cov);

        let grads: Vec<DMatrix<f64>> = (0..p).map(|i| ws.grad_b(&params, i)).collect();
        for (b, g) in params.b.iter_mut().zip(grads) {
            let next = project_b(&(&*b - g * cfg.eta_b), k, cfg.s, cfg.alpha);
            max_change = max_change.max(rel_diff(&next, b));
            *b = next;
        }

        if !params.is_finite() {
            return Err(Error::NonFinite(iter));
        }
        let objective = ws.value(&params);
        if !objective.is_finite() {
            return Err(Error::NonFinite(iter));
        }
        if f0 > 0.0 && objective > limit {
            return Err(Error::Diverged { value: objective, limit });
        }
        let distance = truth.map(|t| distance_metric(&params, t)).transpose()?;
        trace.records.push(TraceRecord {
            iter,
            objective,
            max_change,
            distance,
        });
        if max_change < cfg.tol {
            trace.converged = true;
            break;
        }
    }
    log::debug!(
        "fit: {} sweeps, objective {:e} -> {:e}",
        trace.iterations(),
        f0,
        trace.final_objective()
    );
    Ok((params, trace))
}

/// Initialization and solver in one call.
pub fn estimate(data: &ScoreBundle, k: usize, method: InitMethod, cfg: &FitConfig) -> Result<(ModelParams, FitTrace)> {
    let init = initialize(data, k, method, cfg)?;
    fit(data, &init, cfg)
}

/// Sign matrix aligning the rows of `est`'s first transform with `truth`'s.
pub fn alignment(est: &ModelParams, truth: &ModelParams) -> Result<SignFlip> {
    sign_align(&est.a_mats[0].transpose(), &truth.a_mats[0].transpose())
}

/// Squared Frobenius distance to `truth` after sign alignment:
/// `(max_m‖QA^m − A^m*‖² + max_i‖QB_i(I⊗Q) − B_i*‖², Σ_m … + Σ_i …)`.
pub fn distance_metric(est: &ModelParams, truth: &ModelParams) -> Result<(f64, f64)> {
    if est.p() != truth.p() || est.k() != truth.k() || est.k_m() != truth.k_m() {
        return Err(Error::dims("estimate and truth have different dimensions"));
    }
    let q = alignment(est, truth)?;
    let a_dist: Vec<f64> = est
        .a_mats
        .iter()
        .zip(&truth.a_mats)
        .map(|(a, t)| (q.apply_rows(a) - t).norm_squared())
        .collect();
    let b_dist: Vec<f64> = est
        .b
        .iter()
        .zip(&truth.b)
        .map(|(b, t)| (q.conjugate_blocks(b) - t).norm_squared())
        .collect();
    let max = a_dist.iter().copied().fold(0.0, f64::max) + b_dist.iter().copied().fold(0.0, f64::max);
    let sum = a_dist.iter().sum::<f64>() + b_dist.iter().sum::<f64>();
    Ok((max, sum))
}
