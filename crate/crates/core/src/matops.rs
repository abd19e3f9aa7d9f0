//! Dense symmetric-matrix utilities: inverse square roots, whitening,
//! covariance assembly and sign alignment.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative eigenvalue floor below which a matrix is treated as singular.
pub const EIG_FLOOR_REL: f64 = 1e-10;

/// A symmetric positive-definite matrix with its eigendecomposition cached.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    values: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpdMatrix {
    /// Symmetrizes `m` as `(m + mᵀ)/2` and checks positive definiteness.
    ///
    /// The smallest eigenvalue must exceed `1e-10 · λ_max`; anything below
    /// is reported as [`Error::NotPositiveDefinite`] rather than regularized.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::dims(format!(
                "SPD matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let values = symmetrize(&m);
        let eig = SymmetricEigen::new(values.clone());
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        let floor = EIG_FLOOR_REL * max.max(0.0);
        if !(min > floor) || !max.is_finite() {
            return Err(Error::NotPositiveDefinite { min_eig: min, floor });
        }
        Ok(SpdMatrix {
            values,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.min()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.max()
    }

    /// `V f(Λ) Vᵀ`, made exactly symmetric.
    fn spectral_map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, lambda) in self.eigenvalues.iter().enumerate() {
            let w = f(*lambda);
            scaled.column_mut(j).scale_mut(w);
        }
        symmetrize(&(scaled * v.transpose()))
    }

    pub fn inv_sqrt(&self) -> DMatrix<f64> {
        self.spectral_map(|l| 1.0 / l.sqrt())
    }

    pub fn sqrt(&self) -> DMatrix<f64> {
        self.spectral_map(f64::sqrt)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.spectral_map(|l| 1.0 / l)
    }
}

/// Inverse square root `S` with `S·M·S = I`, S symmetric.
pub fn inv_sqrt(m: &SpdMatrix) -> DMatrix<f64> {
    m.inv_sqrt()
}

/// Convenience: validate then invert-square-root a raw matrix.
pub fn whitening(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(SpdMatrix::new(m.clone())?.inv_sqrt())
}

/// Square root of a positive-semidefinite matrix; negative eigenvalues
/// (round-off) are clamped to zero.
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut scaled = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        scaled.column_mut(j).scale_mut(lambda.max(0.0).sqrt());
    }
    scaled * eig.eigenvectors.transpose()
}

/// `(M + Mᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(m)).eigenvalues.min()
}

/// Uncentered sample covariance `(1/N)·X·Xᵀ` of the columns of `x`.
pub fn sample_covariance(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = x.ncols();
    if n == 0 {
        return Err(Error::dims("sample covariance needs at least one sample"));
    }
    let mut gram = x * x.transpose();
    gram /= n as f64;
    Ok(symmetrize(&gram))
}

/// Uncentered cross-covariance `(1/N)·X·Yᵀ`.
pub fn cross_covariance(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != y.ncols() || x.ncols() == 0 {
        return Err(Error::dims(format!(
            "cross covariance sample counts {} vs {}",
            x.ncols(),
            y.ncols()
        )));
    }
    Ok(x * y.transpose() / x.ncols() as f64)
}

/// A diagonal ±1 matrix, stored as its diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SignFlip(pub Vec<f64>);

impl SignFlip {
    pub fn identity(k: usize) -> Self {
        SignFlip(vec![1.0; k])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|q| *q > 0.0)
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.0))
    }

    /// `Q·A`: flips rows.
    pub fn apply_rows(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = a.clone();
        for (i, q) in self.0.iter().enumerate() {
            if *q < 0.0 {
                out.row_mut(i).neg_mut();
            }
        }
        out
    }

    /// `Q·B·Qᵀ` for a square block.
    pub fn conjugate(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(b.nrows(), b.ncols(), |u, v| self.0[u] * self.0[v] * b[(u, v)])
    }

    /// `Q·B·(I ⊗ Qᵀ)` for a row of k×k blocks.
    pub fn conjugate_blocks(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let k = self.0.len();
        DMatrix::from_fn(b.nrows(), b.ncols(), |u, c| {
            self.0[u] * self.0[c % k] * b[(u, c)]
        })
    }
}

/// Columnwise sign alignment: `q_i = +1` iff `⟨û_i, u*_i⟩ ≥ 0`.
pub fn sign_align(u_hat: &DMatrix<f64>, u_star: &DMatrix<f64>) -> Result<SignFlip> {
    if u_hat.shape() != u_star.shape() {
        return Err(Error::dims(format!(
            "sign_align shapes {:?} vs {:?}",
            u_hat.shape(),
            u_star.shape()
        )));
    }
    Ok(SignFlip(
        (0..u_hat.ncols())
            .map(|j| {
                if u_hat.column(j).dot(&u_star.column(j)) >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect(),
    ))
}

/// Frobenius norm of `a - b` relative to `‖b‖`, or absolute when `b = 0`.
pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let d = (a - b).norm();
    let scale = b.norm();
    if scale > 0.0 {
        d / scale
    } else {
        d
    }
}
