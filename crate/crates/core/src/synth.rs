//! Synthetic multimodal data with a known latent graph.
//!
//! Every random draw comes from a ChaCha12 stream keyed by `(seed, domain)`;
//! sample `n` uses stream `n`, so the first `N` samples do not depend on how
//! many are generated in total.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matops::{psd_sqrt, symmetrize, SpdMatrix};
use crate::model::{flatten_b, GraphEstimate, ModelParams, ScoreBundle};

/// Attempts allowed for the randomized constructions.
pub const MAX_ATTEMPTS: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphKind {
    G1,
    G2,
    G3,
    G4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum NoiseModel {
    /// `Σ^{m,q} = σ·I`; `sigma` is a variance.
    NM1 { sigma: f64 },
    /// Block-diagonal structured noise from random orthogonal blocks.
    NM2,
    None,
}

fn default_scale() -> f64 {
    1.0
}

fn default_tau() -> f64 {
    0.1
}

/// Everything needed to reproduce a simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub graph: GraphKind,
    pub p: usize,
    /// Latent dimension per node.
    pub r: usize,
    /// Observed dimension per node, one entry per modality.
    pub r_m: Vec<usize>,
    pub noise: NoiseModel,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    /// Multiplier on every off-diagonal block of Graphs 1 to 3.
    #[serde(default = "default_scale")]
    pub offdiag_scale: f64,
    /// Fraction of Graph 4 edges shared by every basis level.
    #[serde(default = "default_tau")]
    pub g4_tau: f64,
}

impl SyntheticSpec {
    pub fn new(graph: GraphKind, p: usize, r: usize, r_m: Vec<usize>, noise: NoiseModel, n: usize, seed: u64) -> Self {
        SyntheticSpec {
            graph,
            p,
            r,
            r_m,
            noise,
            n,
            seed,
            offdiag_scale: 1.0,
            g4_tau: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::invalid("p", "need at least two nodes"));
        }
        if self.r == 0 {
            return Err(Error::invalid("r", "must be positive"));
        }
        if self.r_m.is_empty() {
            return Err(Error::invalid("r_m", "need at least one modality"));
        }
        if self.r_m.iter().any(|&rm| rm < self.r) {
            return Err(Error::invalid("r_m", format!("every entry must be at least r = {}", self.r)));
        }
        if self.graph == GraphKind::G2 && !self.p.is_multiple_of(10) {
            return Err(Error::invalid("p", "Graph 2 needs p to be a multiple of 10"));
        }
        match self.noise {
            NoiseModel::NM1 { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                return Err(Error::invalid("noise.sigma", "must be positive"));
            }
            NoiseModel::NM2 if !self.p.is_multiple_of(10) => {
                return Err(Error::invalid("noise", "noise model 2 needs p to be a multiple of 10"));
            }
            _ => {}
        }
        if !(self.offdiag_scale.is_finite() && self.offdiag_scale >= 0.0) {
            return Err(Error::invalid("offdiag_scale", "must be a non-negative number"));
        }
        if !(0.0..=1.0).contains(&self.g4_tau) {
            return Err(Error::invalid("g4_tau", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

mod domain {
    pub const PRECISION: u64 = 1;
    pub const TRANSFORM: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const SAMPLES: u64 = 4;
    pub const PADDING: u64 = 5;
}

/// Independent generator for `(seed, domain, sub)`.
pub(crate) fn keyed_rng(seed: u64, domain: u64, sub: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    key[16..24].copy_from_slice(&sub.to_le_bytes());
    ChaCha12Rng::from_seed(key)
}

fn normal_vector(n: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

/// Tridiagonal `Ψ`: ones on the diagonal, 0.5 next to it.
pub fn psi(r: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, r, |a, b| match a.abs_diff(b) {
        0 => 1.0,
        1 => 0.5,
        _ => 0.0,
    })
}

/// Block-banded precision with `Ω_{i,i±d} = coeffs[d-1]·scale·Ψ`.
fn banded_precision(p: usize, r: usize, coeffs: &[f64], scale: f64) -> DMatrix<f64> {
    let base = psi(r);
    let mut omega = DMatrix::identity(p * r, p * r);
    for i in 0..p {
        for (d, c) in coeffs.iter().enumerate() {
            let j = i + d + 1;
            if j < p {
                let block = &base * (c * scale);
                omega.view_mut((i * r, j * r), (r, r)).copy_from(&block);
                omega.view_mut((j * r, i * r), (r, r)).copy_from(&block);
            }
        }
    }
    omega
}

/// Nonzero off-diagonal `r × r` blocks of `omega`.
pub fn support_of(omega: &DMatrix<f64>, p: usize, r: usize) -> GraphEstimate {
    let mut edges = vec![];
    for i in 0..p {
        for j in i + 1..p {
            if omega.view((i * r, j * r), (r, r)).iter().any(|x| *x != 0.0) {
                edges.push((i, j));
            }
        }
    }
    GraphEstimate::from_edges(p, edges)
}

/// Number of neighbors per node from `f(y) ∝ y^{-2}` on `[1, p−1]`,
/// by inverse CDF and rounding down.
pub fn power_law_degrees(p: usize, rng: &mut impl Rng) -> Vec<usize> {
    let top = (p - 1) as f64;
    (0..p)
        .map(|_| {
            let u: f64 = rng.random();
            let y = 1.0 / (1.0 - u * (1.0 - 1.0 / top));
            (y.floor() as usize).clamp(1, p - 1)
        })
        .collect()
}

/// Undirected edge set from power-law degrees with uniformly chosen
/// neighbors; pairs stored as `(i, j)` with `i > j`.
pub fn power_law_edges(p: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let degrees = power_law_degrees(p, rng);
    let mut edges = BTreeSet::new();
    for (i, &d) in degrees.iter().enumerate() {
        for pick in sample_indices(rng, p - 1, d) {
            let j = if pick < i { pick } else { pick + 1 };
            edges.insert((i.max(j), i.min(j)));
        }
    }
    edges.into_iter().collect()
}

/// Splits `edges` into `r` overlapping sets: a random `τ` fraction is shared
/// by all, the rest is dealt out in a widening round robin.
pub fn partition_edges(edges: &[(usize, usize)], r: usize, tau: f64, rng: &mut impl Rng) -> Vec<Vec<(usize, usize)>> {
    let n_common = ((tau * edges.len() as f64).round() as usize).min(edges.len());
    let common: BTreeSet<usize> = sample_indices(rng, edges.len(), n_common).into_iter().collect();
    let shared: Vec<(usize, usize)> = common.iter().map(|&e| edges[e]).collect();
    let mut sets = vec![shared; r];
    let (mut l, mut c) = (1usize, 1usize);
    for (e, edge) in edges.iter().enumerate() {
        if common.contains(&e) {
            continue;
        }
        sets[l - 1].push(*edge);
        l += 1;
        if l > c {
            l = 1;
            c = c % r + 1;
        }
    }
    sets
}

fn graph4_attempt(p: usize, r: usize, tau: f64, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    let edges = power_law_edges(p, rng);
    let sets = partition_edges(&edges, r, tau, rng);
    let mut tilde = Vec::with_capacity(r);
    for set in &sets {
        let mut w = DMatrix::<f64>::identity(p, p);
        for &(i, j) in set {
            let mag = rng.random_range(1.0 / 3.0..=2.0 / 3.0);
            w[(i, j)] = if rng.random_bool(0.5) { mag } else { -mag };
        }
        for mut row in w.row_iter_mut() {
            let n = row.norm();
            row /= n;
        }
        let mut w = symmetrize(&w);
        w.fill_diagonal(1.0);
        tilde.push(w);
    }
    // diag(Σ_ps) with Σ_l = 3 l^{-1.8} Ω̃_l^{-1}
    let mut sigma_diag = DVector::zeros(p * r);
    for (l, w) in tilde.iter().enumerate() {
        let inv = w
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::RankDeficient("Graph 4 basis precision is singular".into()))?;
        let c = 3.0 * ((l + 1) as f64).powf(-1.8);
        for i in 0..p {
            sigma_diag[l * p + i] = c * inv[(i, i)];
        }
    }
    if sigma_diag.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::NotPositiveDefinite {
            min_eig: sigma_diag.min(),
            floor: 0.0,
        });
    }
    let offdiag = |w: &DMatrix<f64>| {
        let mut o = w.clone();
        o.fill_diagonal(0.0);
        o
    };
    let mut bar = DMatrix::zeros(p * r, p * r);
    for l in 0..r {
        bar.view_mut((l * p, l * p), (p, p)).copy_from(&tilde[l]);
        if l + 1 < r {
            let coupling = (offdiag(&tilde[l]) + offdiag(&tilde[l + 1])) / 2.0;
            bar.view_mut((l * p, (l + 1) * p), (p, p)).copy_from(&coupling);
            bar.view_mut(((l + 1) * p, l * p), (p, p)).copy_from(&coupling);
        }
    }
    let d: Vec<f64> = (0..p * r)
        .map(|a| 1.0 / (sigma_diag[a].sqrt() * bar[(a, a)].sqrt()))
        .collect();
    // basis-major index l·p + i moves to node-major index i·r + l
    let omega = DMatrix::from_fn(p * r, p * r, |x, y| {
        let (i, l) = (x / r, x % r);
        let (j, m) = (y / r, y % r);
        let (a, b) = (l * p + i, m * p + j);
        d[a] * bar[(a, b)] * d[b]
    });
    SpdMatrix::new(omega.clone())?;
    Ok(omega)
}

/// Latent precision matrix and its true edge set.
pub fn build_precision(spec: &SyntheticSpec) -> Result<(DMatrix<f64>, GraphEstimate)> {
    let (p, r, scale) = (spec.p, spec.r, spec.offdiag_scale);
    let omega = match spec.graph {
        GraphKind::G1 => banded_precision(p, r, &[0.4, 0.2], scale),
        GraphKind::G3 => banded_precision(p, r, &[0.4, 0.2, 0.1], scale),
        GraphKind::G2 => {
            if p % 10 != 0 {
                return Err(Error::invalid("p", "Graph 2 needs p to be a multiple of 10"));
            }
            let group = banded_precision(10, r, &[0.4, 0.2], scale);
            let mut omega = DMatrix::identity(p * r, p * r);
            for t in (0..p / 10).step_by(2) {
                omega.view_mut((t * 10 * r, t * 10 * r), (10 * r, 10 * r)).copy_from(&group);
            }
            omega
        }
        GraphKind::G4 => {
            let mut last = None;
            let mut found = None;
            for attempt in 0..MAX_ATTEMPTS {
                let mut rng = keyed_rng(spec.seed, domain::PRECISION, attempt);
                match graph4_attempt(p, r, spec.g4_tau, &mut rng) {
                    Ok(o) => {
                        found = Some(o);
                        break;
                    }
                    Err(e) => last = Some(e),
                }
            }
            match found {
                Some(o) => o,
                None => return Err(last.expect("at least one attempt")),
            }
        }
    };
    SpdMatrix::new(omega.clone())?;
    let edges = support_of(&omega, p, r);
    Ok((omega, edges))
}

fn transform_attempt(r: usize, r_m: usize, rng: &mut impl Rng) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let nnz = ((r_m as f64 / 3.0).round() as usize).max(1);
    let pivots = sample_indices(rng, r_m, r).into_vec();
    let mut raw = DMatrix::zeros(r, r_m);
    for (i, &pivot) in pivots.iter().enumerate() {
        raw[(i, pivot)] = StandardNormal.sample(rng);
        let others = sample_indices(rng, r_m - 1, nnz - 1);
        for o in others {
            let c = if o < pivot { o } else { o + 1 };
            raw[(i, c)] = StandardNormal.sample(rng);
        }
    }
    let qr = raw.transpose().qr();
    let rdiag = qr.r().diagonal();
    if rdiag.iter().any(|v: &f64| v.abs() < 1e-8) {
        return Err(Error::RankDeficient("sparse rows are linearly dependent".into()));
    }
    let mut a = qr.q().transpose();
    for (i, mut row) in a.row_iter_mut().enumerate() {
        if row[row.transpose().iamax()] < 0.0 {
            row.neg_mut();
        }
        row *= 0.2 * (i + 2) as f64 + 1.0;
    }
    let gram = &a * a.transpose();
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient("transform rows are dependent".into()))?;
    let l = a.transpose() * inv;
    Ok((l, a))
}

/// Loading `L` (r_m × r) and transform `A = L†` (r × r_m) for one modality.
pub fn build_transforms(r: usize, r_m: usize, seed: u64, modality: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if r == 0 || r > r_m {
        return Err(Error::invalid("r_m", format!("need 1 ≤ r ≤ r_m, got r = {r}, r_m = {r_m}")));
    }
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = keyed_rng(seed, domain::TRANSFORM, (modality as u64) << 32 | attempt);
        match transform_attempt(r, r_m, &mut rng) {
            Ok(out) => return Ok(out),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Noise covariances, with the pre-symmetrization blocks of noise model 2.
#[derive(Debug, Clone)]
pub struct NoiseCov {
    pub cov: Vec<DMatrix<f64>>,
    /// `raw_blocks[m][t]` is modality `m`'s `t`-th orthogonal block.
    pub raw_blocks: Option<Vec<Vec<DMatrix<f64>>>>,
}

fn random_orthogonal(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// 90° clockwise rotation: `out[i][j] = F[n−1−j][i]`.
pub fn rotate_clockwise(f: &DMatrix<f64>) -> DMatrix<f64> {
    let n = f.nrows();
    DMatrix::from_fn(f.ncols(), n, |i, j| f[(n - 1 - j, i)])
}

/// Per-modality noise covariance of size `p·r_m`.
pub fn build_noise_cov(noise: &NoiseModel, p: usize, r_m: &[usize], seed: u64) -> Result<NoiseCov> {
    match *noise {
        NoiseModel::NM1 { sigma } => Ok(NoiseCov {
            cov: r_m.iter().map(|&rm| DMatrix::identity(p * rm, p * rm) * sigma).collect(),
            raw_blocks: None,
        }),
        NoiseModel::None => Ok(NoiseCov {
            cov: r_m.iter().map(|&rm| DMatrix::zeros(p * rm, p * rm)).collect(),
            raw_blocks: None,
        }),
        NoiseModel::NM2 => {
            if !p.is_multiple_of(10) {
                return Err(Error::invalid("noise", "noise model 2 needs p to be a multiple of 10"));
            }
            let groups = p / 10;
            let mut raw: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(r_m.len());
            for (m, &rm) in r_m.iter().enumerate() {
                let size = 10 * rm;
                let mut rng = keyed_rng(seed, domain::NOISE, m as u64);
                let blocks = (0..groups)
                    .map(|t| {
                        if m > 0 && rm == r_m[0] {
                            rotate_clockwise(&raw[0][t])
                        } else if m > 0 {
                            rotate_clockwise(&random_orthogonal(size, &mut rng))
                        } else {
                            random_orthogonal(size, &mut rng)
                        }
                    })
                    .collect();
                raw.push(blocks);
            }
            let mut cov = Vec::with_capacity(r_m.len());
            for (m, &rm) in r_m.iter().enumerate() {
                let size = 10 * rm;
                let eigs: Vec<_> = raw[m]
                    .iter()
                    .map(|f| nalgebra::SymmetricEigen::new(symmetrize(f)))
                    .collect();
                let lambda_max_orig = eigs.iter().map(|e| e.eigenvalues.max()).fold(f64::MIN, f64::max);
                let lambda_max = eigs
                    .iter()
                    .flat_map(|e| e.eigenvalues.iter().copied())
                    .filter(|l| *l > 0.0)
                    .fold(0.0, f64::max);
                let mut full = DMatrix::zeros(p * rm, p * rm);
                for (t, e) in eigs.iter().enumerate() {
                    let kept = e.eigenvalues.map(|l| {
                        if l > 0.0 && lambda_max > 0.0 {
                            0.01 * l / lambda_max * lambda_max_orig
                        } else {
                            0.0
                        }
                    });
                    let block = &e.eigenvectors * DMatrix::from_diagonal(&kept) * e.eigenvectors.transpose();
                    full.view_mut((t * size, t * size), (size, size)).copy_from(&symmetrize(&block));
                }
                cov.push(full);
            }
            Ok(NoiseCov {
                cov,
                raw_blocks: Some(raw),
            })
        }
    }
}

/// Neighborhood regression blocks `B*_ij = −Ω_ii^{-1} Ω_ij`, one
/// `r × r(p−1)` matrix per node.
pub fn population_b(omega: &DMatrix<f64>, p: usize, r: usize) -> Result<Vec<DMatrix<f64>>> {
    if omega.shape() != (p * r, p * r) {
        return Err(Error::dims(format!("precision has shape {:?} for p = {p}, r = {r}", omega.shape())));
    }
    SpdMatrix::new(omega.clone())?;
    (0..p)
        .map(|i| {
            let inv = SpdMatrix::new(omega.view((i * r, i * r), (r, r)).into_owned())?.inverse();
            let blocks: Vec<DMatrix<f64>> = (0..p)
                .filter(|&j| j != i)
                .map(|j| -(&inv * omega.view((i * r, j * r), (r, r))))
                .collect();
            flatten_b(&blocks)
        })
        .collect()
}

/// Everything known about a simulated dataset.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub p: usize,
    pub r: usize,
    pub omega: DMatrix<f64>,
    pub edges: GraphEstimate,
    pub l_mats: Vec<DMatrix<f64>>,
    pub a_mats: Vec<DMatrix<f64>>,
    pub noise: NoiseCov,
}

impl GroundTruth {
    pub fn b_blocks(&self) -> Result<Vec<DMatrix<f64>>> {
        population_b(&self.omega, self.p, self.r)
    }

    /// True transforms and neighborhood blocks as model parameters.
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.a_mats.clone(), self.b_blocks()?)
    }

    /// `Ω^{-1}`.
    pub fn latent_covariance(&self) -> Result<DMatrix<f64>> {
        Ok(SpdMatrix::new(self.omega.clone())?.inverse())
    }

    /// `(I⊗L^m) Ω^{-1} (I⊗L^m)ᵀ`, plus the noise covariance if requested.
    pub fn population_covariance(&self, with_noise: bool) -> Result<Vec<DMatrix<f64>>> {
        let latent = self.latent_covariance()?;
        Ok(self
            .l_mats
            .iter()
            .zip(&self.noise.cov)
            .map(|(l, q)| {
                let lift = crate::objective::kron_identity(self.p, l);
                let c = &lift * &latent * lift.transpose();
                symmetrize(&if with_noise { c + q } else { c })
            })
            .collect())
    }
}

/// Draws `spec.n` samples of every modality together with the ground truth.
pub fn simulate(spec: &SyntheticSpec) -> Result<(ScoreBundle, GroundTruth)> {
    spec.validate()?;
    let (p, r) = (spec.p, spec.r);
    let (omega, edges) = build_precision(spec)?;
    let mut l_mats = Vec::with_capacity(spec.r_m.len());
    let mut a_mats = Vec::with_capacity(spec.r_m.len());
    for (m, &rm) in spec.r_m.iter().enumerate() {
        let (l, a) = build_transforms(r, rm, spec.seed, m)?;
        l_mats.push(l);
        a_mats.push(a);
    }
    let noise = build_noise_cov(&spec.noise, p, &spec.r_m, spec.seed)?;
    let noise_roots: Option<Vec<DMatrix<f64>>> = match spec.noise {
        NoiseModel::None => None,
        NoiseModel::NM1 { sigma } => Some(noise.cov.iter().map(|c| DMatrix::identity(c.nrows(), c.nrows()) * sigma.sqrt()).collect()),
        NoiseModel::NM2 => Some(noise.cov.iter().map(psd_sqrt).collect()),
    };

    let chol = omega
        .clone()
        .cholesky()
        .ok_or(Error::NotPositiveDefinite { min_eig: f64::NAN, floor: 0.0 })?;
    let upper = chol.l().transpose();
    let mut scores: Vec<DMatrix<f64>> = spec.r_m.iter().map(|&rm| DMatrix::zeros(p * rm, spec.n)).collect();
    for n in 0..spec.n {
        let mut rng = keyed_rng(spec.seed, domain::SAMPLES, 0);
        rng.set_stream(n as u64);
        let w = normal_vector(p * r, &mut rng);
        let z = upper
            .solve_upper_triangular(&w)
            .expect("Cholesky factor has a positive diagonal");
        for (m, l) in l_mats.iter().enumerate() {
            let rm = spec.r_m[m];
            let mut y = DVector::zeros(p * rm);
            for i in 0..p {
                y.rows_mut(i * rm, rm).copy_from(&(l * z.rows(i * r, r)));
            }
            if let Some(roots) = &noise_roots {
                y += &roots[m] * normal_vector(p * rm, &mut rng);
            }
            scores[m].set_column(n, &y);
        }
    }
    let data = ScoreBundle::with_dims(p, spec.r_m.clone(), scores)?;
    Ok((
        data,
        GroundTruth {
            p,
            r,
            omega,
            edges,
            l_mats,
            a_mats,
            noise,
        },
    ))
}

/// Appends `extra` pure-noise basis coordinates (variance `variance`) after
/// each node's scores in every modality, as if the curves had been projected
/// onto a larger basis than the signal occupies.
pub fn append_noise_dims(data: &ScoreBundle, extra: usize, variance: f64, seed: u64) -> Result<ScoreBundle> {
    let sd = variance.sqrt();
    let n = data.n_samples();
    let mut blocks = Vec::with_capacity(data.modalities());
    for m in 0..data.modalities() {
        let km = data.k_m()[m];
        let mut nodes = Vec::with_capacity(data.p());
        for i in 0..data.p() {
            let mut rng = keyed_rng(seed, domain::PADDING, (m * data.p() + i) as u64);
            let mut b = DMatrix::zeros(km + extra, n);
            b.rows_mut(0, km).copy_from(&data.node(m, i));
            for c in 0..n {
                for e in 0..extra {
                    let w: f64 = StandardNormal.sample(&mut rng);
                    b[(km + e, c)] = sd * w;
                }
            }
            nodes.push(b);
        }
        blocks.push(nodes);
    }
    ScoreBundle::from_node_blocks(blocks)
}
