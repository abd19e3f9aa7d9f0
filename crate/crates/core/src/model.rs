//! Core data types: basis scores, model parameters, fit configuration and
//! graph estimates.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DMatrixView};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions of a fitted model: `p` nodes, latent dimension `k`, and one
/// observed basis dimension per modality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisDims {
    pub p: usize,
    pub k: usize,
    pub k_m: Vec<usize>,
}

impl BasisDims {
    pub fn new(p: usize, k: usize, k_m: Vec<usize>) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("p", "need at least one node"));
        }
        if k == 0 {
            return Err(Error::invalid("k", "latent dimension must be positive"));
        }
        if k_m.len() < 2 {
            return Err(Error::invalid("k_m", "need at least two modalities"));
        }
        if let Some(&small) = k_m.iter().find(|&&km| km < k) {
            return Err(Error::invalid(
                "k",
                format!("k = {k} exceeds observed basis dimension {small}"),
            ));
        }
        Ok(BasisDims { p, k, k_m })
    }

    pub fn modalities(&self) -> usize {
        self.k_m.len()
    }
}

/// Per-modality score matrices. Modality `m` is a `(p·k_m) × N` matrix whose
/// node `i` occupies rows `[i·k_m, (i+1)·k_m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBundle {
    p: usize,
    k_m: Vec<usize>,
    scores: Vec<DMatrix<f64>>,
}

impl ScoreBundle {
    /// Builds a bundle, inferring each `k_m` from the row count.
    pub fn new(p: usize, scores: Vec<DMatrix<f64>>) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("p", "need at least one node"));
        }
        let k_m = scores
            .iter()
            .enumerate()
            .map(|(m, y)| {
                if y.nrows() == 0 || y.nrows() % p != 0 {
                    Err(Error::dims(format!(
                        "modality {m}: {} rows is not a positive multiple of p = {p}",
                        y.nrows()
                    )))
                } else {
                    Ok(y.nrows() / p)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_dims(p, k_m, scores)
    }

    pub fn with_dims(p: usize, k_m: Vec<usize>, scores: Vec<DMatrix<f64>>) -> Result<Self> {
        if scores.is_empty() || scores.len() != k_m.len() {
            return Err(Error::dims(format!(
                "{} score matrices for {} modalities",
                scores.len(),
                k_m.len()
            )));
        }
        let n = scores[0].ncols();
        for (m, (y, km)) in scores.iter().zip(&k_m).enumerate() {
            if y.nrows() != p * km {
                return Err(Error::dims(format!(
                    "modality {m}: expected {} rows, got {}",
                    p * km,
                    y.nrows()
                )));
            }
            if y.ncols() != n {
                return Err(Error::dims(format!(
                    "modality {m}: {} samples, modality 0 has {n}",
                    y.ncols()
                )));
            }
        }
        Ok(ScoreBundle { p, k_m, scores })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k_m(&self) -> &[usize] {
        &self.k_m
    }

    pub fn modalities(&self) -> usize {
        self.scores.len()
    }

    pub fn n_samples(&self) -> usize {
        self.scores[0].ncols()
    }

    pub fn scores(&self, m: usize) -> &DMatrix<f64> {
        &self.scores[m]
    }

    pub fn all_scores(&self) -> &[DMatrix<f64>] {
        &self.scores
    }

    /// `Y_i^m`, the `k_m × N` block of node `i`.
    pub fn node(&self, m: usize, i: usize) -> DMatrixView<'_, f64> {
        let km = self.k_m[m];
        self.scores[m].rows(i * km, km)
    }

    /// Model dimensions for latent dimension `k`.
    pub fn dims(&self, k: usize) -> Result<BasisDims> {
        BasisDims::new(self.p, k, self.k_m.clone())
    }

    /// Splits modality `m` into its `p` node blocks.
    pub fn split_nodes(&self, m: usize) -> Vec<DMatrix<f64>> {
        (0..self.p).map(|i| self.node(m, i).into_owned()).collect()
    }

    /// Inverse of [`split_nodes`](Self::split_nodes) over all modalities.
    pub fn from_node_blocks(blocks: Vec<Vec<DMatrix<f64>>>) -> Result<Self> {
        let p = blocks.first().map_or(0, Vec::len);
        let mut scores = Vec::with_capacity(blocks.len());
        for (m, nodes) in blocks.iter().enumerate() {
            if nodes.len() != p || p == 0 {
                return Err(Error::dims(format!("modality {m} has {} nodes", nodes.len())));
            }
            let km = nodes[0].nrows();
            let n = nodes[0].ncols();
            let mut y = DMatrix::zeros(p * km, n);
            for (i, b) in nodes.iter().enumerate() {
                if b.shape() != (km, n) {
                    return Err(Error::dims(format!("modality {m} node {i} shape {:?}", b.shape())));
                }
                y.rows_mut(i * km, km).copy_from(b);
            }
            scores.push(y);
        }
        Self::new(p, scores)
    }

    /// Keeps the given sample columns, in order.
    pub fn select_samples(&self, idx: &[usize]) -> ScoreBundle {
        let scores = self.scores.iter().map(|y| y.select_columns(idx)).collect();
        ScoreBundle {
            p: self.p,
            k_m: self.k_m.clone(),
            scores,
        }
    }

    /// Subtracts each row's sample mean.
    pub fn centered(&self) -> ScoreBundle {
        let scores = self
            .scores
            .iter()
            .map(|y| {
                let mut c = y.clone();
                if y.ncols() > 0 {
                    for mut row in c.row_iter_mut() {
                        let mean = row.mean();
                        row.add_scalar_mut(-mean);
                    }
                }
                c
            })
            .collect();
        ScoreBundle {
            p: self.p,
            k_m: self.k_m.clone(),
            scores,
        }
    }

    /// Multiplies every score by `c`.
    pub fn scaled(&self, c: f64) -> ScoreBundle {
        ScoreBundle {
            p: self.p,
            k_m: self.k_m.clone(),
            scores: self.scores.iter().map(|y| y * c).collect(),
        }
    }
}

/// Position of neighbor `j` inside node `i`'s block row (neighbors ordered
/// `0..i` then `i+1..p`).
#[inline]
pub fn neighbor_pos(i: usize, j: usize) -> usize {
    debug_assert_ne!(i, j);
    if j < i {
        j
    } else {
        j - 1
    }
}

/// Inverse of [`neighbor_pos`].
#[inline]
pub fn neighbor_at(i: usize, pos: usize) -> usize {
    if pos < i {
        pos
    } else {
        pos + 1
    }
}

/// Transformation matrices `A^m` (k × k_m) and neighborhood blocks `B_i`
/// (k × k(p−1)); the diagonal block `B_ii = I_k` is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub a_mats: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
}

impl ModelParams {
    pub fn new(a_mats: Vec<DMatrix<f64>>, b: Vec<DMatrix<f64>>) -> Result<Self> {
        let params = ModelParams { a_mats, b };
        params.check()?;
        Ok(params)
    }

    /// Zero neighborhood blocks around the given transforms.
    pub fn with_zero_b(a_mats: Vec<DMatrix<f64>>, p: usize) -> Result<Self> {
        let k = a_mats
            .first()
            .map(|a| a.nrows())
            .ok_or_else(|| Error::dims("no transformation matrices"))?;
        let b = vec![DMatrix::zeros(k, k * p.saturating_sub(1)); p];
        Self::new(a_mats, b)
    }

    fn check(&self) -> Result<()> {
        let k = self
            .a_mats
            .first()
            .map(|a| a.nrows())
            .ok_or_else(|| Error::dims("no transformation matrices"))?;
        if k == 0 {
            return Err(Error::dims("latent dimension is zero"));
        }
        if let Some(a) = self.a_mats.iter().find(|a| a.nrows() != k) {
            return Err(Error::dims(format!("A has {} rows, expected {k}", a.nrows())));
        }
        let p = self.b.len();
        if p == 0 {
            return Err(Error::dims("no neighborhood blocks"));
        }
        for (i, b) in self.b.iter().enumerate() {
            if b.shape() != (k, k * (p - 1)) {
                return Err(Error::dims(format!(
                    "B_{i} has shape {:?}, expected ({k}, {})",
                    b.shape(),
                    k * (p - 1)
                )));
            }
        }
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.b.len()
    }

    pub fn k(&self) -> usize {
        self.a_mats[0].nrows()
    }

    pub fn modalities(&self) -> usize {
        self.a_mats.len()
    }

    pub fn k_m(&self) -> Vec<usize> {
        self.a_mats.iter().map(|a| a.ncols()).collect()
    }

    /// `B_ij` for `j ≠ i`.
    pub fn block(&self, i: usize, j: usize) -> DMatrixView<'_, f64> {
        let k = self.k();
        self.b[i].columns(neighbor_pos(i, j) * k, k)
    }

    pub fn set_block(&mut self, i: usize, j: usize, block: &DMatrix<f64>) {
        let k = self.k();
        self.b[i].columns_mut(neighbor_pos(i, j) * k, k).copy_from(block);
    }

    /// `B̃_i`: the k × kp matrix with `+I_k` at block `i` and `−B_ij`
    /// elsewhere, so `B̃_i · (stacked latent scores)` is node `i`'s residual.
    pub fn b_tilde(&self, i: usize) -> DMatrix<f64> {
        b_tilde(&self.b[i], i, self.p(), self.k())
    }

    /// Indices `j ≠ i` whose block in `B_i` has any nonzero entry.
    pub fn support(&self, i: usize) -> Vec<usize> {
        let k = self.k();
        (0..self.p().saturating_sub(1))
            .filter(|&pos| self.b[i].columns(pos * k, k).iter().any(|x| *x != 0.0))
            .map(|pos| neighbor_at(i, pos))
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.a_mats.iter().chain(&self.b).all(|m| m.iter().all(|x| x.is_finite()))
    }
}

/// Stand-alone form of [`ModelParams::b_tilde`].
pub fn b_tilde(b_i: &DMatrix<f64>, i: usize, p: usize, k: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(k, k * p);
    for j in 0..p {
        let mut dst = out.columns_mut(j * k, k);
        if j == i {
            dst.fill_with_identity();
        } else {
            let pos = neighbor_pos(i, j);
            dst.copy_from(&(-b_i.columns(pos * k, k)));
        }
    }
    out
}

/// Concatenates `p−1` square k×k blocks left to right.
pub fn flatten_b(blocks: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let k = blocks
        .first()
        .map(|b| b.nrows())
        .ok_or_else(|| Error::dims("no blocks to flatten"))?;
    let mut out = DMatrix::zeros(k, k * blocks.len());
    for (pos, b) in blocks.iter().enumerate() {
        if b.shape() != (k, k) {
            return Err(Error::dims(format!("block {pos} has shape {:?}", b.shape())));
        }
        out.columns_mut(pos * k, k).copy_from(b);
    }
    Ok(out)
}

/// Splits a k × k(p−1) matrix into its square blocks.
pub fn unflatten_b(b: &DMatrix<f64>, k: usize) -> Result<Vec<DMatrix<f64>>> {
    if k == 0 || b.nrows() != k || !b.ncols().is_multiple_of(k) {
        return Err(Error::dims(format!(
            "cannot split {:?} into {k}x{k} blocks",
            b.shape()
        )));
    }
    Ok((0..b.ncols() / k)
        .map(|pos| b.columns(pos * k, k).into_owned())
        .collect())
}

/// How the two directed block norms are combined when selecting edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EdgeRule {
    #[default]
    #[serde(rename = "AND")]
    And,
    #[serde(rename = "OR")]
    Or,
}

impl std::fmt::Display for EdgeRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EdgeRule::And => "AND",
            EdgeRule::Or => "OR",
        })
    }
}

/// Tuning parameters for initialization and the alternating solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Maximum number of nonzero neighbor blocks per node.
    pub s: usize,
    /// Fraction of entries kept per row and column of each block.
    pub alpha: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    /// Step size for the initial B stage; `None` uses the Lipschitz rate.
    pub eta_b0: Option<f64>,
    pub max_iter_main: usize,
    pub max_iter_init: usize,
    pub tol: f64,
    pub eps0: f64,
    pub edge_rule: EdgeRule,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            s: 3,
            alpha: 1.0,
            tau1: 0.25,
            tau2: 100.0,
            eta_a: 1e-4,
            eta_b: 1e-3,
            eta_b0: None,
            max_iter_main: 2000,
            max_iter_init: 500,
            tol: 1e-6,
            eps0: 1e-3,
            edge_rule: EdgeRule::And,
        }
    }
}

/// Number of entries kept per row/column by the α-thresholding operator.
pub fn keep_count(alpha: f64, k: usize) -> usize {
    ((alpha * k as f64) + 1e-9).floor() as usize
}

impl FitConfig {
    /// Checks the dimension-free constraints.
    pub fn validate(&self) -> Result<()> {
        fn positive(field: &str, v: f64) -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must be a positive finite number, got {v}")))
            }
        }
        if self.s == 0 {
            return Err(Error::invalid("s", "must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid("alpha", format!("must lie in (0, 1], got {}", self.alpha)));
        }
        positive("tau1", self.tau1)?;
        positive("tau2", self.tau2)?;
        if self.tau1 > self.tau2 {
            return Err(Error::invalid("tau1", "must not exceed tau2"));
        }
        positive("eta_a", self.eta_a)?;
        positive("eta_b", self.eta_b)?;
        if let Some(eta) = self.eta_b0 {
            positive("eta_b0", eta)?;
        }
        if self.max_iter_main == 0 {
            return Err(Error::invalid("max_iter_main", "must be at least 1"));
        }
        if self.max_iter_init == 0 {
            return Err(Error::invalid("max_iter_init", "must be at least 1"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::invalid("tol", "must be non-negative"));
        }
        if !(self.eps0 >= 0.0) {
            return Err(Error::invalid("eps0", "must be non-negative"));
        }
        Ok(())
    }

    /// Full validation against model dimensions.
    pub fn validate_for(&self, p: usize, k: usize) -> Result<()> {
        self.validate()?;
        if self.s > p.saturating_sub(1) {
            return Err(Error::invalid("s", format!("must be at most p - 1 = {}", p.saturating_sub(1))));
        }
        if keep_count(self.alpha, k) == 0 {
            return Err(Error::invalid("alpha", format!("floor(alpha * k) is zero for k = {k}")));
        }
        Ok(())
    }
}

/// An undirected edge set with the directed block norms it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphEstimate {
    pub p: usize,
    /// Entry `(i, j)` is `‖B_ij‖_F`; the diagonal is zero.
    pub block_norms: DMatrix<f64>,
    /// Unordered pairs stored as `(i, j)` with `i < j`.
    pub edges: BTreeSet<(usize, usize)>,
}

impl GraphEstimate {
    pub fn from_edges(p: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let edges: BTreeSet<_> = edges
            .into_iter()
            .filter(|(i, j)| i != j)
            .map(|(i, j)| (i.min(j), i.max(j)))
            .collect();
        let mut block_norms = DMatrix::zeros(p, p);
        for &(i, j) in &edges {
            block_norms[(i, j)] = 1.0;
            block_norms[(j, i)] = 1.0;
        }
        GraphEstimate {
            p,
            block_norms,
            edges,
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Neighbors of node `i` in the edge set.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.p).filter(|&j| j != i && self.has_edge(i, j)).collect()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.p).map(|i| self.degree(i)).max().unwrap_or(0)
    }
}
