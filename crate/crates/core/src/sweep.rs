//! Replicated simulate-and-fit experiments over one varying setting.

use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph_eval::{auc, auc15, confusion, finalize_curve, select_edges, RocPoint};
use crate::init::{initialize, InitMethod};
use crate::model::FitConfig;
use crate::solver::{distance_metric, fit_with_truth};
use crate::synth::{simulate, SyntheticSpec};

/// The setting varied across a sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Vary {
    /// Group sparsity; one ROC point per value.
    S(Vec<usize>),
    /// Sample size.
    N(Vec<usize>),
    /// Latent dimension used by the fit.
    K(Vec<usize>),
}

impl Vary {
    pub fn name(&self) -> &'static str {
        match self {
            Vary::S(_) => "s",
            Vary::N(_) => "N",
            Vary::K(_) => "k",
        }
    }

    pub fn values(&self) -> &[usize] {
        match self {
            Vary::S(v) | Vary::N(v) | Vary::K(v) => v,
        }
    }
}

fn parse_values(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::invalid("vary", format!("cannot parse {text:?}; use a..b or a,b,c"));
    let values: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        (a..=b).collect()
    } else {
        text.split(',')
            .map(|v| v.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if values.is_empty() {
        return Err(bad());
    }
    Ok(values)
}

impl FromStr for Vary {
    type Err = Error;

    /// `s=1..9`, `N=100,200,400` or `k=1,2,3`. The upper end of a range is
    /// included.
    fn from_str(text: &str) -> Result<Self> {
        let (key, values) = text
            .split_once('=')
            .ok_or_else(|| Error::invalid("vary", "expected NAME=VALUES"))?;
        let values = parse_values(values)?;
        match key.trim() {
            "s" => Ok(Vary::S(values)),
            "N" | "n" => Ok(Vary::N(values)),
            "k" => Ok(Vary::K(values)),
            other => Err(Error::invalid("vary", format!("unknown setting {other:?}; expected s, N or k"))),
        }
    }
}

/// Settings shared by every run of a sweep.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub spec: SyntheticSpec,
    pub config: FitConfig,
    pub vary: Vary,
    pub replicates: usize,
    pub init: InitMethod,
    /// Latent dimension when `k` is not the varied setting; defaults to `spec.r`.
    pub k: Option<usize>,
}

/// One `(value, replicate)` outcome. Metrics are `NaN` when the run failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub vary: String,
    pub value: usize,
    pub replicate: usize,
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub s: usize,
    pub tpr: f64,
    pub fpr: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub dist_max: f64,
    pub dist_sum: f64,
    pub status: String,
}

/// Seed of replicate `rep`.
pub fn replicate_seed(base: u64, rep: usize) -> u64 {
    base.wrapping_add(rep as u64)
}

fn run_one(plan: &SweepPlan, value: usize, rep: usize) -> SweepRow {
    let mut spec = plan.spec.clone();
    spec.seed = replicate_seed(plan.spec.seed, rep);
    let mut cfg = plan.config.clone();
    let mut k = plan.k.unwrap_or(spec.r);
    match plan.vary {
        Vary::S(_) => cfg.s = value,
        Vary::N(_) => spec.n = value,
        Vary::K(_) => k = value,
    }
    let mut row = SweepRow {
        vary: plan.vary.name().into(),
        value,
        replicate: rep,
        seed: spec.seed,
        n: spec.n,
        k,
        s: cfg.s,
        tpr: f64::NAN,
        fpr: f64::NAN,
        objective: f64::NAN,
        iterations: 0,
        converged: false,
        dist_max: f64::NAN,
        dist_sum: f64::NAN,
        status: "ok".into(),
    };
    let outcome = (|| -> Result<()> {
        cfg.validate_for(spec.p, k)?;
        let (data, truth) = simulate(&spec)?;
        let init = initialize(&data, k, plan.init, &cfg)?;
        let (params, trace) = if k == spec.r {
            let tp = truth.params()?;
            let out = fit_with_truth(&data, &init, &cfg, &tp)?;
            let (mx, sm) = distance_metric(&out.0, &tp)?;
            row.dist_max = mx;
            row.dist_sum = sm;
            out
        } else {
            crate::solver::fit(&data, &init, &cfg)?
        };
        let est = select_edges(&params, cfg.eps0, cfg.edge_rule);
        let (tpr, fpr) = confusion(&est, &truth.edges)?;
        row.tpr = tpr;
        row.fpr = fpr;
        row.objective = trace.final_objective();
        row.iterations = trace.iterations();
        row.converged = trace.converged;
        Ok(())
    })();
    if let Err(e) = outcome {
        log::warn!("{}={value} replicate {rep} failed: {e}", plan.vary.name());
        row.status = e.kind().into();
    }
    row
}

/// Runs every `(value, replicate)` pair, in parallel on the current rayon
/// pool. Rows come back ordered by value, then replicate.
pub fn run_sweep(plan: &SweepPlan) -> Result<Vec<SweepRow>> {
    plan.spec.validate()?;
    plan.config.validate()?;
    if plan.replicates == 0 {
        return Err(Error::invalid("replicates", "must be at least 1"));
    }
    let jobs: Vec<(usize, usize)> = plan
        .vary
        .values()
        .iter()
        .flat_map(|&v| (0..plan.replicates).map(move |r| (v, r)))
        .collect();
    Ok(jobs.par_iter().map(|&(v, r)| run_one(plan, v, r)).collect())
}

/// [`run_sweep`] on a dedicated pool of `threads` workers.
pub fn run_sweep_with_threads(plan: &SweepPlan, threads: usize) -> Result<Vec<SweepRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid("threads", e.to_string()))?;
    pool.install(|| run_sweep(plan))
}

/// ROC curve of one replicate from the successful rows of an `s` sweep.
pub fn replicate_curve(rows: &[SweepRow], replicate: usize) -> Vec<RocPoint> {
    finalize_curve(
        rows.iter()
            .filter(|r| r.replicate == replicate && r.status == "ok")
            .map(|r| RocPoint::new(r.fpr, r.tpr))
            .collect(),
    )
}

/// `(replicate, AUC, AUC15)` for every replicate present in `rows`.
pub fn replicate_auc(rows: &[SweepRow]) -> Vec<(usize, f64, f64)> {
    let mut reps: Vec<usize> = rows.iter().map(|r| r.replicate).collect();
    reps.sort_unstable();
    reps.dedup();
    reps.into_iter()
        .map(|rep| {
            let curve = replicate_curve(rows, rep);
            (rep, auc(&curve), auc15(&curve))
        })
        .collect()
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// `(k·Σ_m k_m ∨ k²·log p) / N`.
pub fn statistical_rate(k: usize, k_m: &[usize], p: usize, n: usize) -> f64 {
    let kf = k as f64;
    let a = kf * k_m.iter().sum::<usize>() as f64;
    let b = kf * kf * (p as f64).ln();
    a.max(b) / n as f64
}
