//! Initialization: CCA-based transforms and projected gradient descent for
//! the neighborhood blocks with the transforms held fixed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::matops::{cross_covariance, rel_diff, sample_covariance, SpdMatrix};
use crate::model::{FitConfig, ModelParams, ScoreBundle};
use crate::objective::{SampleCovariance, Workspace};
use crate::operators::project_b;

/// Canonical correlations below this make the latent dimension unidentifiable.
pub const RANK_FLOOR: f64 = 1e-6;

/// Which node's covariances the CCA was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcaSource {
    Node(usize),
    Aggregate,
}

/// Top-`k` singular triples of the whitened cross-covariance, plus the
/// modality covariances used for whitening.
#[derive(Debug, Clone)]
pub struct CcaDecomposition {
    /// Canonical correlations, descending.
    pub gamma: DVector<f64>,
    pub v1: DMatrix<f64>,
    pub v2: DMatrix<f64>,
    pub source: CcaSource,
    pub cov1: SpdMatrix,
    pub cov2: SpdMatrix,
}

impl CcaDecomposition {
    /// Loading estimate `L̂^m = (Σ̂^m)^{1/2} V̂^m Γ̂^{1/2}`, a right inverse
    /// of the corresponding transform.
    pub fn loading(&self, m: usize) -> DMatrix<f64> {
        let (cov, v) = if m == 0 { (&self.cov1, &self.v1) } else { (&self.cov2, &self.v2) };
        let root_gamma = DMatrix::from_diagonal(&self.gamma.map(f64::sqrt));
        cov.sqrt() * v * root_gamma
    }
}

/// Initial transforms with the decomposition they came from.
#[derive(Debug, Clone)]
pub struct CcaInit {
    pub a_mats: Vec<DMatrix<f64>>,
    pub decomposition: CcaDecomposition,
}

/// Whitened cross-covariance `S1^{-1/2} S12 S2^{-1/2}`.
fn whitened_cross(s1: &SpdMatrix, s2: &SpdMatrix, s12: &DMatrix<f64>) -> DMatrix<f64> {
    s1.inv_sqrt() * s12 * s2.inv_sqrt()
}

/// Full SVD with singular values sorted descending and each pair signed so
/// the left vector's largest-magnitude entry is positive.
fn sorted_svd(r: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>, DMatrix<f64>) {
    let svd = r.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let gamma = DVector::from_iterator(order.len(), order.iter().map(|&j| svd.singular_values[j]));
    let mut left = u.select_columns(&order);
    let mut right = v_t.transpose().select_columns(&order);
    for j in 0..order.len() {
        let col = left.column(j);
        let lead = col.iamax();
        if col[lead] < 0.0 {
            left.column_mut(j).neg_mut();
            right.column_mut(j).neg_mut();
        }
    }
    (gamma, left, right)
}

fn require_two_modalities(data: &ScoreBundle) -> Result<()> {
    if data.modalities() != 2 {
        return Err(Error::dims(format!(
            "CCA initialization needs exactly 2 modalities, got {}",
            data.modalities()
        )));
    }
    Ok(())
}

fn node_moments(data: &ScoreBundle, i: usize) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let y1 = data.node(0, i).into_owned();
    let y2 = data.node(1, i).into_owned();
    Ok((sample_covariance(&y1)?, sample_covariance(&y2)?, cross_covariance(&y1, &y2)?))
}

fn finish(
    s1: SpdMatrix,
    s2: SpdMatrix,
    r: &DMatrix<f64>,
    k: usize,
    source: CcaSource,
) -> Result<CcaInit> {
    let (gamma_all, left, right) = sorted_svd(r);
    let gamma = gamma_all.rows(0, k).into_owned();
    if gamma[k - 1] < RANK_FLOOR {
        return Err(Error::RankDeficient(format!(
            "canonical correlation {k} is {:e}, below {RANK_FLOOR:e}",
            gamma[k - 1]
        )));
    }
    let v1 = left.columns(0, k).into_owned();
    let v2 = right.columns(0, k).into_owned();
    let scale = DMatrix::from_diagonal(&gamma.map(|g| 1.0 / g.sqrt()));
    let a1 = &scale * v1.transpose() * s1.inv_sqrt();
    let a2 = &scale * v2.transpose() * s2.inv_sqrt();
    Ok(CcaInit {
        a_mats: vec![a1, a2],
        decomposition: CcaDecomposition {
            gamma,
            v1,
            v2,
            source,
            cov1: s1,
            cov2: s2,
        },
    })
}

fn check_k(data: &ScoreBundle, k: usize) -> Result<()> {
    require_two_modalities(data)?;
    let kmin = data.k_m().iter().copied().min().unwrap_or(0);
    if k == 0 || k > kmin {
        return Err(Error::invalid("k", format!("must lie in 1..={kmin}, got {k}")));
    }
    Ok(())
}

/// Transforms `A^{m(0)} = Γ^{-1/2} V_mᵀ (Σ̂^m_ii)^{-1/2}` from node `node`'s
/// canonical correlation analysis.
pub fn cca_init(data: &ScoreBundle, k: usize, node: usize) -> Result<CcaInit> {
    check_k(data, k)?;
    if node >= data.p() {
        return Err(Error::invalid("node", format!("{node} out of range for p = {}", data.p())));
    }
    let (s1, s2, s12) = node_moments(data, node)?;
    let s1 = SpdMatrix::new(s1)?;
    let s2 = SpdMatrix::new(s2)?;
    let r = whitened_cross(&s1, &s2, &s12);
    finish(s1, s2, &r, k, CcaSource::Node(node))
}

/// CCA pooled over nodes: the whitened cross-covariances are averaged, and
/// the averaged node covariances whiten the result.
pub fn cca_init_aggregate(data: &ScoreBundle, k: usize) -> Result<CcaInit> {
    check_k(data, k)?;
    let p = data.p();
    let (k1, k2) = (data.k_m()[0], data.k_m()[1]);
    let mut r = DMatrix::zeros(k1, k2);
    let mut avg1 = DMatrix::zeros(k1, k1);
    let mut avg2 = DMatrix::zeros(k2, k2);
    for i in 0..p {
        let (s1, s2, s12) = node_moments(data, i)?;
        avg1 += &s1;
        avg2 += &s2;
        r += whitened_cross(&SpdMatrix::new(s1)?, &SpdMatrix::new(s2)?, &s12);
    }
    let pf = p as f64;
    r /= pf;
    let s1 = SpdMatrix::new(avg1 / pf)?;
    let s2 = SpdMatrix::new(avg2 / pf)?;
    finish(s1, s2, &r, k, CcaSource::Aggregate)
}

/// All canonical correlations at `node`, descending.
pub fn canonical_correlations(data: &ScoreBundle, node: usize) -> Result<Vec<f64>> {
    require_two_modalities(data)?;
    let (s1, s2, s12) = node_moments(data, node)?;
    let r = whitened_cross(&SpdMatrix::new(s1)?, &SpdMatrix::new(s2)?, &s12);
    Ok(sorted_svd(&r).0.iter().copied().collect())
}

/// Default step size for [`init_b`]:
/// `1 / (max_m σ_max²(A^m) · ‖Σ̂^m‖_2)`.
pub fn default_eta_b0(a0: &[DMatrix<f64>], cov: &SampleCovariance) -> f64 {
    let lipschitz = a0
        .iter()
        .enumerate()
        .map(|(m, a)| {
            let smax = a.singular_values().max();
            smax * smax * cov.spectral_norm(m)
        })
        .fold(0.0, f64::max);
    if lipschitz > 0.0 {
        1.0 / lipschitz
    } else {
        1.0
    }
}

/// Projected gradient descent on
/// `h_i(B_i) = Σ_m (1/2MN)‖A^m Y_i − B_i (I⊗A^m) Y_{\i}‖²_F`
/// from `B_i = 0`, independently for every node.
pub fn init_b(data: &ScoreBundle, a0: &[DMatrix<f64>], cfg: &FitConfig) -> Result<Vec<DMatrix<f64>>> {
    let cov = SampleCovariance::from_scores(data)?;
    init_b_cov(&cov, a0, cfg)
}

/// [`init_b`] from a precomputed covariance.
pub fn init_b_cov(cov: &SampleCovariance, a0: &[DMatrix<f64>], cfg: &FitConfig) -> Result<Vec<DMatrix<f64>>> {
    let mut params = ModelParams::with_zero_b(a0.to_vec(), cov.p())?;
    if params.k_m() != cov.k_m() {
        return Err(Error::dims(format!(
            "transforms have k_m = {:?}, data has {:?}",
            params.k_m(),
            cov.k_m()
        )));
    }
    let (p, k) = (params.p(), params.k());
    cfg.validate_for(p, k)?;
    let inv_m = 1.0 / cov.modalities() as f64;
    let eta = cfg.eta_b0.unwrap_or_else(|| default_eta_b0(a0, cov));
    let ws = Workspace::new(a0, cov);

    for i in 0..p {
        let h0 = inv_m * ws.node_value(&params, i);
        let limit = 10.0 * h0;
        let mut iterations = 0;
        for it in 1..=cfg.max_iter_init {
            iterations = it;
            let grad = ws.grad_b(&params, i) * inv_m;
            let next = project_b(&(&params.b[i] - grad * eta), k, cfg.s, cfg.alpha);
            if next.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(it));
            }
            let change = rel_diff(&next, &params.b[i]);
            params.b[i] = next;
            let h = inv_m * ws.node_value(&params, i);
            if h0 > 0.0 && h > limit {
                return Err(Error::Diverged { value: h, limit });
            }
            if change < cfg.tol {
                break;
            }
        }
        log::debug!("init_b node {i}: {iterations} iterations");
    }
    Ok(params.b)
}

/// How the initial transforms are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMethod {
    /// CCA at the first node.
    #[default]
    Cca,
    /// CCA pooled over all nodes.
    CcaAggregate,
}

/// CCA transforms followed by [`init_b`].
pub fn initialize(data: &ScoreBundle, k: usize, method: InitMethod, cfg: &FitConfig) -> Result<ModelParams> {
    let cca = match method {
        InitMethod::Cca => cca_init(data, k, 0)?,
        InitMethod::CcaAggregate => cca_init_aggregate(data, k)?,
    };
    let b = init_b(data, &cca.a_mats, cfg)?;
    ModelParams::new(cca.a_mats, b)
}
