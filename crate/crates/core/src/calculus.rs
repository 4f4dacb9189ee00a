//! Functional calculus for Hermitian matrices.
//!
//! Every matrix function goes through a single eigendecomposition of the
//! re-Hermitized input, so that `log`, powers and inverse square roots of the
//! same operator are mutually consistent.

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{max_abs, ComplexMatrix};

/// Numerical thresholds shared by the matrix-function routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Eigenvalues below this are treated as zero when a function needs a
    /// strictly positive spectrum.
    pub rank_floor: f64,
    /// Allowed entrywise error of `U diag(λ) U†` against the input.
    pub recon_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            rank_floor: 1e-12,
            recon_tol: 1e-10,
        }
    }
}

/// `(m + m†) / 2`.
pub fn hermitize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Largest entry of `m - m†`.
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Eigenvalues (ascending) and eigenvectors (as columns) of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenSystem {
    pub fn new(m: &ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} is not square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("matrix entry".into()));
        }
        let eig = SymmetricEigen::new(hermitize(m));
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors =
            ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| eig.eigenvectors[(i, order[j])]);
        Ok(Self { values, vectors })
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `U diag(f(λ)) U†`.
    pub fn map<F: Fn(f64) -> Complex64>(&self, f: F) -> ComplexMatrix {
        let diag = DVector::from_iterator(self.values.len(), self.values.iter().map(|&x| f(x)));
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= diag[j];
        }
        scaled * self.vectors.adjoint()
    }

    pub fn map_real<F: Fn(f64) -> f64>(&self, f: F) -> ComplexMatrix {
        self.map(|x| Complex64::new(f(x), 0.0))
    }

    pub fn require_positive(&self, tol: &ToleranceConfig) -> Result<()> {
        if self.min() < tol.rank_floor {
            return Err(Error::RankDeficient {
                min_eigenvalue: self.min(),
                floor: tol.rank_floor,
            });
        }
        Ok(())
    }

    /// Entrywise reconstruction error against `m`.
    pub fn reconstruction_error(&self, m: &ComplexMatrix) -> f64 {
        max_abs(&(self.map_real(|x| x) - m))
    }

    /// `λ^z` for complex `z`, on a strictly positive spectrum.
    pub fn pow_complex(&self, z: Complex64, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
        self.require_positive(tol)?;
        Ok(self.map(|x| (z * x.ln()).exp()))
    }

    pub fn log(&self, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
        self.require_positive(tol)?;
        Ok(self.map_real(f64::ln))
    }
}

fn checked_eigen(m: &ComplexMatrix, tol: &ToleranceConfig) -> Result<EigenSystem> {
    let eig = EigenSystem::new(m)?;
    let err = eig.reconstruction_error(&hermitize(m));
    let scale = 1.0_f64.max(eig.max().abs()).max(eig.min().abs());
    if err > tol.recon_tol * scale {
        return Err(Error::NonFinite(format!(
            "eigendecomposition reconstruction error {err:e}"
        )));
    }
    Ok(eig)
}

/// Matrix logarithm of a positive definite matrix.
pub fn mat_log(m: &ComplexMatrix, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
    checked_eigen(m, tol)?.log(tol)
}

/// `m^z` for complex `z` on a positive definite matrix.
pub fn mat_pow_complex(
    m: &ComplexMatrix,
    z: Complex64,
    tol: &ToleranceConfig,
) -> Result<ComplexMatrix> {
    checked_eigen(m, tol)?.pow_complex(z, tol)
}

/// `m^p` for real `p` on a positive definite matrix.
pub fn mat_pow(m: &ComplexMatrix, p: f64, tol: &ToleranceConfig) -> Result<ComplexMatrix> {
    mat_pow_complex(m, Complex64::new(p, 0.0), tol)
}

/// Square root of a positive semidefinite matrix; tiny negative eigenvalues are
/// set to zero.
pub fn mat_sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(EigenSystem::new(m)?.map_real(|x| x.max(0.0).sqrt()))
}

/// Exponential of a Hermitian matrix.
pub fn mat_exp_hermitian(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(EigenSystem::new(m)?.map_real(f64::exp))
}

/// Schatten p-norm from singular values; `p = f64::INFINITY` gives the operator norm.
pub fn schatten_norm(m: &ComplexMatrix, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidOrder(p));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("matrix entry".into()));
    }
    let sv = m.clone().singular_values();
    if p.is_infinite() {
        return Ok(sv.iter().fold(0.0_f64, |a, &s| a.max(s)));
    }
    if p == 1.0 {
        return Ok(sv.iter().sum());
    }
    Ok(sv.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p))
}

pub fn operator_norm(m: &ComplexMatrix) -> f64 {
    schatten_norm(m, f64::INFINITY).expect("order infinity is valid")
}

pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    schatten_norm(m, 1.0).expect("order 1 is valid")
}

/// Hilbert–Schmidt inner product `tr[a† b]`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// `tr[a b]` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// KMS-weighted inner product `tr[√ρ f √ρ g]` of Hermitian observables.
pub fn weighted_inner(
    f: &ComplexMatrix,
    g: &ComplexMatrix,
    rho: &ComplexMatrix,
    tol: &ToleranceConfig,
) -> Result<f64> {
    if f.shape() != rho.shape() || g.shape() != rho.shape() {
        return Err(Error::DimensionMismatch(
            "observables and weight differ in shape".into(),
        ));
    }
    let sqrt_rho = mat_pow(rho, 0.5, tol)?;
    Ok(trace_product(&(&sqrt_rho * f * &sqrt_rho), g).re)
}
