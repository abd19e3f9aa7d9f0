//! Edge selection from fitted blocks and comparison with a true graph.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{EdgeRule, GraphEstimate, ModelParams};

/// Undirected edges from the directed block norms `‖B_ij‖_F`.
///
/// With [`EdgeRule::And`] both directions must reach `eps0`; with
/// [`EdgeRule::Or`] either one suffices.
pub fn select_edges(params: &ModelParams, eps0: f64, rule: EdgeRule) -> GraphEstimate {
    let p = params.p();
    let norms = DMatrix::from_fn(p, p, |i, j| if i == j { 0.0 } else { params.block(i, j).norm() });
    edges_from_norms(norms, eps0, rule)
}

/// Thresholds a matrix of directed norms.
pub fn edges_from_norms(block_norms: DMatrix<f64>, eps0: f64, rule: EdgeRule) -> GraphEstimate {
    let p = block_norms.nrows();
    let mut edges = std::collections::BTreeSet::new();
    for i in 0..p {
        for j in i + 1..p {
            let (a, b) = (block_norms[(i, j)] >= eps0, block_norms[(j, i)] >= eps0);
            let keep = match rule {
                EdgeRule::And => a && b,
                EdgeRule::Or => a || b,
            };
            if keep {
                edges.insert((i, j));
            }
        }
    }
    GraphEstimate {
        p,
        block_norms,
        edges,
    }
}

/// `(TPR, FPR)` of `est` against `truth` over unordered node pairs.
pub fn confusion(est: &GraphEstimate, truth: &GraphEstimate) -> Result<(f64, f64)> {
    if est.p != truth.p {
        return Err(Error::dims(format!("estimate has p = {}, truth p = {}", est.p, truth.p)));
    }
    let pairs = truth.p * truth.p.saturating_sub(1) / 2;
    let positives = truth.n_edges();
    if positives == 0 {
        return Err(Error::DegenerateTruth("no true edges"));
    }
    if positives == pairs {
        return Err(Error::DegenerateTruth("true graph is complete"));
    }
    let tp = est.edges.intersection(&truth.edges).count();
    let fp = est.edges.difference(&truth.edges).count();
    Ok((tp as f64 / positives as f64, fp as f64 / (pairs - positives) as f64))
}

/// A point on an ROC curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

impl RocPoint {
    pub fn new(fpr: f64, tpr: f64) -> Self {
        RocPoint { fpr, tpr }
    }
}

/// Sorts by FPR (then TPR), drops duplicates and anchors at (0,0), (1,1).
pub fn finalize_curve(mut points: Vec<RocPoint>) -> Vec<RocPoint> {
    points.push(RocPoint::new(0.0, 0.0));
    points.push(RocPoint::new(1.0, 1.0));
    points.sort_by(|a, b| a.fpr.total_cmp(&b.fpr).then(a.tpr.total_cmp(&b.tpr)));
    points.dedup();
    points
}

/// One confusion point per sweep value; values whose fit fails are skipped
/// with a warning.
pub fn roc_curve<T: std::fmt::Debug>(
    sweep: &[T],
    mut fit_fn: impl FnMut(&T) -> Result<GraphEstimate>,
    truth: &GraphEstimate,
) -> Result<Vec<RocPoint>> {
    let mut points = Vec::with_capacity(sweep.len());
    for value in sweep {
        match fit_fn(value) {
            Ok(est) => {
                let (tpr, fpr) = confusion(&est, truth)?;
                points.push(RocPoint::new(fpr, tpr));
            }
            Err(e) => log::warn!("sweep value {value:?} skipped: {e}"),
        }
    }
    Ok(finalize_curve(points))
}

/// ROC over edge thresholds for a single fit.
pub fn roc_over_threshold(params: &ModelParams, eps: &[f64], rule: EdgeRule, truth: &GraphEstimate) -> Result<Vec<RocPoint>> {
    roc_curve(eps, |&e| Ok(select_edges(params, e, rule)), truth)
}

/// Trapezoidal area under an FPR-sorted curve, restricted to `fpr ≤ upto`.
fn area_upto(curve: &[RocPoint], upto: f64) -> f64 {
    let mut area = 0.0;
    for w in curve.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a.fpr >= upto {
            break;
        }
        if b.fpr <= upto {
            area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
        } else {
            let t = (upto - a.fpr) / (b.fpr - a.fpr);
            let y = a.tpr + t * (b.tpr - a.tpr);
            area += (upto - a.fpr) * (a.tpr + y) / 2.0;
        }
    }
    area
}

/// Area under the whole curve.
pub fn auc(curve: &[RocPoint]) -> f64 {
    area_upto(curve, f64::INFINITY)
}

/// Area over `FPR ∈ [0, 0.15]`, divided by 0.15.
pub fn auc15(curve: &[RocPoint]) -> f64 {
    area_upto(curve, 0.15) / 0.15
}
