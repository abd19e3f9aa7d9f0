//! The least-squares objective
//! `f = Σ_i Σ_m (1/2N)‖A^m Y_i − Σ_{j≠i} B_ij A^m Y_j‖²_F`
//! and its analytic gradients.
//!
//! Gradients and the fast objective work from the per-modality sample
//! covariance, so their cost does not depend on `N`.

use nalgebra::{DMatrix, DMatrixView};

use crate::error::{Error, Result};
use crate::matops::{sample_covariance, symmetrize};
use crate::model::{neighbor_at, ModelParams, ScoreBundle};

/// Per-modality covariance `Σ̂^m = (1/N)·Y^m·(Y^m)ᵀ` with node-block access.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCovariance {
    p: usize,
    k_m: Vec<usize>,
    sigma: Vec<DMatrix<f64>>,
}

impl SampleCovariance {
    pub fn from_scores(data: &ScoreBundle) -> Result<Self> {
        let sigma = data
            .all_scores()
            .iter()
            .map(sample_covariance)
            .collect::<Result<Vec<_>>>()?;
        Ok(SampleCovariance {
            p: data.p(),
            k_m: data.k_m().to_vec(),
            sigma,
        })
    }

    /// Wraps given (e.g. population) covariances; each is symmetrized.
    pub fn from_matrices(p: usize, sigma: Vec<DMatrix<f64>>) -> Result<Self> {
        let mut k_m = Vec::with_capacity(sigma.len());
        for (m, s) in sigma.iter().enumerate() {
            if !s.is_square() || p == 0 || s.nrows() % p != 0 || s.nrows() == 0 {
                return Err(Error::dims(format!(
                    "covariance {m} has shape {:?}, not a (p·k_m)-square for p = {p}",
                    s.shape()
                )));
            }
            k_m.push(s.nrows() / p);
        }
        if sigma.is_empty() {
            return Err(Error::dims("no covariance matrices"));
        }
        Ok(SampleCovariance {
            p,
            k_m,
            sigma: sigma.iter().map(symmetrize).collect(),
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k_m(&self) -> &[usize] {
        &self.k_m
    }

    pub fn modalities(&self) -> usize {
        self.sigma.len()
    }

    pub fn matrix(&self, m: usize) -> &DMatrix<f64> {
        &self.sigma[m]
    }

    /// `Σ̂^m_{ij}`, a `k_m × k_m` view.
    pub fn block(&self, m: usize, i: usize, j: usize) -> DMatrixView<'_, f64> {
        let km = self.k_m[m];
        self.sigma[m].view((i * km, j * km), (km, km))
    }

    /// Spectral norm of `Σ̂^m`.
    pub fn spectral_norm(&self, m: usize) -> f64 {
        nalgebra::SymmetricEigen::new(self.sigma[m].clone())
            .eigenvalues
            .amax()
    }

    fn check(&self, params: &ModelParams) -> Result<()> {
        if params.p() != self.p || params.k_m() != self.k_m {
            return Err(Error::dims(format!(
                "parameters (p = {}, k_m = {:?}) vs data (p = {}, k_m = {:?})",
                params.p(),
                params.k_m(),
                self.p,
                self.k_m
            )));
        }
        Ok(())
    }
}

fn check_data(params: &ModelParams, data: &ScoreBundle) -> Result<()> {
    if params.p() != data.p() || params.k_m() != data.k_m() {
        return Err(Error::dims(format!(
            "parameters (p = {}, k_m = {:?}) vs data (p = {}, k_m = {:?})",
            params.p(),
            params.k_m(),
            data.p(),
            data.k_m()
        )));
    }
    if data.n_samples() == 0 {
        return Err(Error::dims("objective needs at least one sample"));
    }
    Ok(())
}

/// Residual `G_i^m = A^m Y_i − Σ_{j≠i} B_ij A^m Y_j` for every node of
/// modality `m`.
pub fn residuals(params: &ModelParams, data: &ScoreBundle, m: usize) -> Result<Vec<DMatrix<f64>>> {
    check_data(params, data)?;
    let a = &params.a_mats[m];
    let latent: Vec<DMatrix<f64>> = (0..data.p()).map(|j| a * data.node(m, j)).collect();
    Ok((0..data.p())
        .map(|i| {
            let mut g = latent[i].clone();
            for j in (0..data.p()).filter(|&j| j != i) {
                g -= params.block(i, j) * &latent[j];
            }
            g
        })
        .collect())
}

/// `f` evaluated directly from the residuals.
pub fn objective_value(params: &ModelParams, data: &ScoreBundle) -> Result<f64> {
    check_data(params, data)?;
    let n = data.n_samples() as f64;
    let mut total = 0.0;
    for m in 0..data.modalities() {
        total += residuals(params, data, m)?
            .iter()
            .map(|g| g.norm_squared())
            .sum::<f64>();
    }
    Ok(total / (2.0 * n))
}

/// `I_p ⊗ A`.
pub fn kron_identity(p: usize, a: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = a.shape();
    let mut out = DMatrix::zeros(p * r, p * c);
    for i in 0..p {
        out.view_mut((i * r, i * c), (r, c)).copy_from(a);
    }
    out
}

/// `f` in the form `Σ_i Σ_m (1/2N)‖B̃_i (I_p⊗A^m) Y^m‖²_F`, with the
/// Kronecker product materialized.
pub fn objective_value_kron(params: &ModelParams, data: &ScoreBundle) -> Result<f64> {
    check_data(params, data)?;
    let n = data.n_samples() as f64;
    let mut total = 0.0;
    for (m, a) in params.a_mats.iter().enumerate() {
        let latent = kron_identity(data.p(), a) * data.scores(m);
        for i in 0..data.p() {
            total += (params.b_tilde(i) * &latent).norm_squared();
        }
    }
    Ok(total / (2.0 * n))
}

/// Covariance products for one set of transforms:
/// `T^m = (I⊗A^m)Σ̂^m` and `S = Σ_m T^m (I⊗A^m)ᵀ`.
pub(crate) struct Workspace {
    k: usize,
    p: usize,
    /// `T^m`, shape `pk × p·k_m`; block `(v, u)` is `A^m Σ̂^m_{vu}`.
    t: Vec<DMatrix<f64>>,
    /// `S`, shape `pk × pk`; block `(u, v)` is `Σ_m A^m Σ̂^m_{uv} A^mᵀ`.
    s: DMatrix<f64>,
}

impl Workspace {
    pub(crate) fn new(a_mats: &[DMatrix<f64>], cov: &SampleCovariance) -> Self {
        let p = cov.p();
        let k = a_mats[0].nrows();
        let mut s = DMatrix::zeros(p * k, p * k);
        let mut t = Vec::with_capacity(a_mats.len());
        for (m, a) in a_mats.iter().enumerate() {
            let km = cov.k_m()[m];
            let sigma = cov.matrix(m);
            let mut tm = DMatrix::zeros(p * k, p * km);
            for u in 0..p {
                tm.rows_mut(u * k, k).copy_from(&(a * sigma.rows(u * km, km)));
            }
            let at = a.transpose();
            for v in 0..p {
                let block = tm.columns(v * km, km) * &at;
                let mut dst = s.columns_mut(v * k, k);
                dst += block;
            }
            t.push(tm);
        }
        Workspace { k, p, t, s }
    }

    /// Nonzero blocks of `B̃_i` as `(node, block)` pairs.
    fn b_tilde_support(params: &ModelParams, i: usize) -> Vec<(usize, DMatrix<f64>)> {
        let k = params.k();
        let mut out = vec![(i, DMatrix::identity(k, k))];
        for pos in 0..params.p() - 1 {
            let blk = params.b[i].columns(pos * k, k);
            if blk.iter().any(|x| *x != 0.0) {
                out.push((neighbor_at(i, pos), -blk.into_owned()));
            }
        }
        out
    }

    /// Support nodes of `B̃_i` and its nonzero blocks side by side.
    fn gathered(params: &ModelParams, i: usize) -> (Vec<usize>, DMatrix<f64>) {
        let k = params.k();
        let supp = Self::b_tilde_support(params, i);
        let mut c = DMatrix::zeros(k, supp.len() * k);
        for (slot, (_, blk)) in supp.iter().enumerate() {
            c.columns_mut(slot * k, k).copy_from(blk);
        }
        (supp.into_iter().map(|(u, _)| u).collect(), c)
    }

    fn expand(nodes: &[usize], width: usize) -> Vec<usize> {
        nodes.iter().flat_map(|&u| u * width..(u + 1) * width).collect()
    }

    /// `½ tr(B̃_i S B̃_iᵀ)`, node `i`'s share of `f`.
    pub(crate) fn node_value(&self, params: &ModelParams, i: usize) -> f64 {
        let (nodes, c) = Self::gathered(params, i);
        let idx = Self::expand(&nodes, self.k);
        let s_sub = self.s.select_rows(idx.iter()).select_columns(idx.iter());
        0.5 * (&c * s_sub).component_mul(&c).sum()
    }

    pub(crate) fn value(&self, params: &ModelParams) -> f64 {
        (0..self.p).map(|i| self.node_value(params, i)).sum()
    }

    /// `∇_{A^m} f = Σ_i Σ_{u,v} B̃_iuᵀ B̃_iv A^m Σ̂^m_{vu}`.
    pub(crate) fn grad_a(&self, params: &ModelParams, m: usize) -> DMatrix<f64> {
        let k = self.k;
        let tm = &self.t[m];
        let km = tm.ncols() / self.p;
        let mut grad = DMatrix::zeros(k, km);
        for i in 0..self.p {
            let (nodes, c) = Self::gathered(params, i);
            let rows = Self::expand(&nodes, k);
            let cols = Self::expand(&nodes, km);
            // column block u of D is Σ_v B̃_iv T_{v,u}
            let d = &c * tm.select_rows(rows.iter()).select_columns(cols.iter());
            for slot in 0..nodes.len() {
                grad.gemm_tr(1.0, &c.columns(slot * k, k), &d.columns(slot * km, km), 1.0);
            }
        }
        grad
    }

    /// `∇_{B_i} f = −B̃_i S_{·,\i}`.
    pub(crate) fn grad_b(&self, params: &ModelParams, i: usize) -> DMatrix<f64> {
        let k = self.k;
        let p = self.p;
        let mut full = DMatrix::zeros(k, p * k);
        for (u, bu) in Self::b_tilde_support(params, i) {
            full -= bu * self.s.rows(u * k, k);
        }
        let mut grad = DMatrix::zeros(k, k * (p - 1));
        for pos in 0..p - 1 {
            let j = neighbor_at(i, pos);
            grad.columns_mut(pos * k, k).copy_from(&full.columns(j * k, k));
        }
        grad
    }
}

/// `f` computed from the covariance instead of the raw scores.
pub fn objective_from_cov(params: &ModelParams, cov: &SampleCovariance) -> Result<f64> {
    cov.check(params)?;
    Ok(Workspace::new(&params.a_mats, cov).value(params))
}

/// Analytic gradient of `f` with respect to `A^m`.
pub fn grad_a(params: &ModelParams, cov: &SampleCovariance, m: usize) -> Result<DMatrix<f64>> {
    cov.check(params)?;
    if m >= params.modalities() {
        return Err(Error::dims(format!("modality {m} out of range")));
    }
    Ok(Workspace::new(&params.a_mats, cov).grad_a(params, m))
}

/// Analytic gradient of `f` with respect to `B_i`.
pub fn grad_b(params: &ModelParams, cov: &SampleCovariance, i: usize) -> Result<DMatrix<f64>> {
    cov.check(params)?;
    if i >= params.p() {
        return Err(Error::dims(format!("node {i} out of range")));
    }
    Ok(Workspace::new(&params.a_mats, cov).grad_b(params, i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matops::SignFlip;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
    }

    fn instance(p: usize, k: usize, km: usize, n: usize, seed: u64) -> (ModelParams, ScoreBundle) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = vec![gaussian(k, km, &mut rng), gaussian(k, km + 1, &mut rng)];
        let b = (0..p).map(|_| gaussian(k, k * (p - 1), &mut rng) * 0.3).collect();
        let data = ScoreBundle::new(p, vec![gaussian(p * km, n, &mut rng), gaussian(p * (km + 1), n, &mut rng)]).unwrap();
        (ModelParams::new(a, b).unwrap(), data)
    }

    /// Literal Kronecker-form A-gradient.
    fn grad_a_kron(params: &ModelParams, cov: &SampleCovariance, m: usize) -> DMatrix<f64> {
        let (p, k) = (params.p(), params.k());
        let km = cov.k_m()[m];
        let mut inner = DMatrix::zeros(p * k, p * km);
        let ia_sigma = kron_identity(p, &params.a_mats[m]) * cov.matrix(m);
        for i in 0..p {
            let bt = params.b_tilde(i);
            inner += bt.transpose() * bt * &ia_sigma;
        }
        let mut grad = DMatrix::zeros(k, km);
        for j in 0..p {
            grad += inner.view((j * k, j * km), (k, km));
        }
        grad
    }

    /// Literal Kronecker-form B-gradient with node-i columns dropped.
    fn grad_b_kron(params: &ModelParams, cov: &SampleCovariance, i: usize) -> DMatrix<f64> {
        let (p, k) = (params.p(), params.k());
        let mut grad = DMatrix::zeros(k, k * (p - 1));
        for (m, a) in params.a_mats.iter().enumerate() {
            let km = cov.k_m()[m];
            let keep: Vec<usize> = (0..p).filter(|&j| j != i).flat_map(|j| j * km..(j + 1) * km).collect();
            let sigma_cols = cov.matrix(m).select_columns(&keep);
            grad -= params.b_tilde(i) * kron_identity(p, a) * sigma_cols * kron_identity(p - 1, a).transpose();
        }
        grad
    }

    #[test]
    fn zero_transform_gives_zero_objective() {
        let (mut params, data) = instance(3, 2, 3, 5, 1);
        params.a_mats.iter_mut().for_each(|a| a.fill(0.0));
        assert_eq!(objective_value(&params, &data).unwrap(), 0.0);
        let cov = SampleCovariance::from_scores(&data).unwrap();
        params.b.iter_mut().for_each(|b| b.fill(0.0));
        assert_eq!(grad_a(&params, &cov, 0).unwrap(), DMatrix::zeros(2, 3));
    }

    #[test]
    fn zero_b_reduces_to_signal_energy() {
        let (mut params, data) = instance(3, 2, 3, 5, 2);
        params.b.iter_mut().for_each(|b| b.fill(0.0));
        let n = data.n_samples() as f64;
        let mut direct = 0.0;
        for m in 0..2 {
            for i in 0..3 {
                direct += (&params.a_mats[m] * data.node(m, i)).norm_squared() / (2.0 * n);
            }
        }
        let f = objective_value(&params, &data).unwrap();
        assert!((f - direct).abs() <= 1e-14 * direct);
    }

    #[test]
    fn residual_and_kron_forms_agree() {
        for seed in 0..20 {
            let (params, data) = instance(3, 2, 3, 5, seed);
            let f1 = objective_value(&params, &data).unwrap();
            let f2 = objective_value_kron(&params, &data).unwrap();
            let f3 = objective_from_cov(&params, &SampleCovariance::from_scores(&data).unwrap()).unwrap();
            assert!((f1 - f2).abs() <= 1e-12 * f1, "{f1} vs {f2}");
            assert!((f1 - f3).abs() <= 1e-10 * f1, "{f1} vs {f3}");
        }
    }

    #[test]
    fn blockwise_gradients_match_kron_formulas() {
        for seed in 0..10 {
            let (params, data) = instance(4, 2, 3, 10, seed);
            let cov = SampleCovariance::from_scores(&data).unwrap();
            for m in 0..2 {
                let g = grad_a(&params, &cov, m).unwrap();
                let r = grad_a_kron(&params, &cov, m);
                assert!((&g - &r).norm() <= 1e-10 * r.norm());
            }
            for i in 0..4 {
                let g = grad_b(&params, &cov, i).unwrap();
                let r = grad_b_kron(&params, &cov, i);
                assert!((&g - &r).norm() <= 1e-10 * r.norm());
            }
        }
    }

    fn max_rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).amax() / b.amax().max(1e-300)
    }

    #[test]
    fn gradients_match_central_differences() {
        let h = 1e-5;
        let (params, data) = instance(4, 2, 3, 10, 7);
        let cov = SampleCovariance::from_scores(&data).unwrap();
        for m in 0..2 {
            let g = grad_a(&params, &cov, m).unwrap();
            let fd = DMatrix::from_fn(g.nrows(), g.ncols(), |r, c| {
                let mut plus = params.clone();
                plus.a_mats[m][(r, c)] += h;
                let mut minus = params.clone();
                minus.a_mats[m][(r, c)] -= h;
                (objective_value(&plus, &data).unwrap() - objective_value(&minus, &data).unwrap()) / (2.0 * h)
            });
            assert!(max_rel(&g, &fd) < 1e-5, "A^{m}: {}", max_rel(&g, &fd));
        }
        for i in 0..4 {
            let g = grad_b(&params, &cov, i).unwrap();
            let fd = DMatrix::from_fn(g.nrows(), g.ncols(), |r, c| {
                let mut plus = params.clone();
                plus.b[i][(r, c)] += h;
                let mut minus = params.clone();
                minus.b[i][(r, c)] -= h;
                (objective_value(&plus, &data).unwrap() - objective_value(&minus, &data).unwrap()) / (2.0 * h)
            });
            assert!(max_rel(&g, &fd) < 1e-5, "B_{i}: {}", max_rel(&g, &fd));
        }
    }

    #[test]
    fn grad_b_two_nodes_matches_residual_formula() {
        let (params, data) = instance(2, 2, 3, 6, 3);
        let cov = SampleCovariance::from_scores(&data).unwrap();
        let n = data.n_samples() as f64;
        let mut direct = DMatrix::zeros(2, 2);
        for (m, a) in params.a_mats.iter().enumerate() {
            let z1 = a * data.node(m, 0);
            let z2 = a * data.node(m, 1);
            let resid = &z1 - params.block(0, 1) * &z2;
            direct -= resid * z2.transpose() / n;
        }
        let g = grad_b(&params, &cov, 0).unwrap();
        assert!((&g - &direct).norm() <= 1e-12 * direct.norm());
    }

    #[test]
    fn grad_a_scales_quadratically_with_data() {
        let (params, data) = instance(3, 2, 3, 8, 4);
        let c = 3.0;
        let g1 = grad_a(&params, &SampleCovariance::from_scores(&data).unwrap(), 1).unwrap();
        let g2 = grad_a(&params, &SampleCovariance::from_scores(&data.scaled(c)).unwrap(), 1).unwrap();
        assert!((g2 - &g1 * (c * c)).norm() <= 1e-12 * 9.0 * g1.norm().max(1.0));
    }

    #[test]
    fn sparse_support_gradients_match_dense() {
        let (mut params, data) = instance(5, 2, 3, 10, 9);
        // zero some blocks so the support shortcut is exercised
        for i in 0..5 {
            params.b[i].columns_mut(0, 2).fill(0.0);
        }
        let cov = SampleCovariance::from_scores(&data).unwrap();
        for i in 0..5 {
            let r = grad_b_kron(&params, &cov, i);
            assert!((grad_b(&params, &cov, i).unwrap() - &r).norm() <= 1e-10 * r.norm());
        }
        let r = grad_a_kron(&params, &cov, 0);
        assert!((grad_a(&params, &cov, 0).unwrap() - &r).norm() <= 1e-10 * r.norm());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn directional_derivatives(seed in 0u64..100_000, p in 2usize..5, k in 1usize..4) {
            let (params, data) = instance(p, k, k + 1, 10, seed);
            let cov = SampleCovariance::from_scores(&data).unwrap();
            let h = 1e-4;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdead);
            let da: Vec<DMatrix<f64>> = params.a_mats.iter().map(|a| gaussian(a.nrows(), a.ncols(), &mut rng)).collect();
            let db: Vec<DMatrix<f64>> = params.b.iter().map(|b| gaussian(b.nrows(), b.ncols(), &mut rng)).collect();
            let norm = (da.iter().chain(&db).map(|d| d.norm_squared()).sum::<f64>()).sqrt();
            let shifted = |t: f64| {
                let mut q = params.clone();
                for (a, d) in q.a_mats.iter_mut().zip(&da) { *a += d * (t / norm); }
                for (b, d) in q.b.iter_mut().zip(&db) { *b += d * (t / norm); }
                objective_value(&q, &data).unwrap()
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            let mut analytic = 0.0;
            for m in 0..2 { analytic += grad_a(&params, &cov, m).unwrap().dot(&da[m]) / norm; }
            for i in 0..p { analytic += grad_b(&params, &cov, i).unwrap().dot(&db[i]) / norm; }
            prop_assert!((fd - analytic).abs() <= 1e-4 * analytic.abs().max(1e-3), "fd {} analytic {}", fd, analytic);
        }

        #[test]
        fn objective_sign_invariant(seed in 0u64..100_000, mask in 0u8..8) {
            let (params, data) = instance(3, 3, 4, 6, seed);
            let q = SignFlip((0..3).map(|b| if mask >> b & 1 == 1 { -1.0 } else { 1.0 }).collect());
            let flipped = ModelParams::new(
                params.a_mats.iter().map(|a| q.apply_rows(a)).collect(),
                params.b.iter().map(|b| q.conjugate_blocks(b)).collect(),
            ).unwrap();
            let f1 = objective_value(&params, &data).unwrap();
            let f2 = objective_value(&flipped, &data).unwrap();
            prop_assert!((f1 - f2).abs() <= 1e-12 * f1);
        }
    }
}
