//! Density matrices and reproducible random ensembles.
//!
//! Randomness comes from ChaCha8 streams seeded by [`Seed`]. Per-trial seeds
//! are derived from a root seed and the trial index with the splitmix64
//! finalizer (see [`Seed::for_trial`]), so any single trial can be regenerated
//! from the seed printed in a report.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculus::{hermiticity_defect, hermitize, EigenSystem, ToleranceConfig};
use crate::error::{Error, Result};
use crate::tensor::{embed, marginal, ComplexMatrix, HilbertLayout, Region};

/// Tolerance used when validating user-supplied density matrices.
pub const STATE_TOL: f64 = 1e-12;

/// A positive semidefinite, unit-trace operator on a [`HilbertLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    layout: HilbertLayout,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity to [`STATE_TOL`].
    pub fn new(matrix: ComplexMatrix, layout: HilbertLayout) -> Result<Self> {
        let d = layout.total_dim();
        if matrix.shape() != (d, d) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for layout {:?}",
                matrix.nrows(),
                matrix.ncols(),
                layout.dims()
            )));
        }
        let defect = hermiticity_defect(&matrix);
        if defect > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (defect {defect:e})"
            )));
        }
        let tr = matrix.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let matrix = hermitize(&matrix);
        let min = EigenSystem::new(&matrix)?.min();
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix, layout })
    }

    /// Wraps the output of a trace-preserving computation: re-Hermitizes and
    /// divides out round-off in the trace, without a positivity check.
    pub(crate) fn from_computed(matrix: ComplexMatrix, layout: HilbertLayout) -> Result<Self> {
        let h = hermitize(&matrix);
        let tr = h.trace().re;
        if !tr.is_finite() || tr <= 0.0 {
            return Err(Error::InvalidState(format!(
                "computed operator has trace {tr}"
            )));
        }
        if (tr - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidState(format!(
                "computed operator has trace {tr}, expected 1"
            )));
        }
        Ok(Self {
            matrix: h / Complex64::new(tr, 0.0),
            layout,
        })
    }

    pub fn maximally_mixed(layout: &HilbertLayout) -> Self {
        let d = layout.total_dim();
        Self {
            matrix: ComplexMatrix::identity(d, d) / Complex64::new(d as f64, 0.0),
            layout: layout.clone(),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn eigen(&self) -> EigenSystem {
        EigenSystem::new(&self.matrix).expect("validated density matrix is finite and square")
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().min()
    }

    pub fn is_full_rank(&self, tol: &ToleranceConfig) -> bool {
        self.min_eigenvalue() >= tol.rank_floor
    }

    pub fn require_full_rank(&self, tol: &ToleranceConfig) -> Result<()> {
        self.eigen().require_positive(tol)
    }

    /// Reduced state on `kept`, with the sub-layout of those sites.
    pub fn marginal(&self, kept: Region) -> Result<DensityMatrix> {
        let m = marginal(&self.matrix, &self.layout, kept)?;
        DensityMatrix::from_computed(m, self.layout.sub_layout(kept))
    }

    /// Reduced state after tracing out `traced`.
    pub fn trace_out(&self, traced: Region) -> Result<DensityMatrix> {
        self.layout.check_region(traced)?;
        self.marginal(self.layout.complement(traced))
    }

    /// `self` on `region` tensored with `other` on the complement of `region`.
    pub fn tensor_with(
        &self,
        region: Region,
        other: &DensityMatrix,
        layout: &HilbertLayout,
    ) -> Result<DensityMatrix> {
        let m = crate::tensor::tensor_regions(&self.matrix, region, &other.matrix, layout)?;
        DensityMatrix::from_computed(m, layout.clone())
    }

    /// Operator `self ⊗ 1` on a larger layout.
    pub fn embed_in(&self, support: Region, layout: &HilbertLayout) -> Result<ComplexMatrix> {
        embed(&self.matrix, support, layout)
    }
}

/// Root or per-trial random seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

/// splitmix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Seed {
    /// Seed of trial `index` under root `self`: `splitmix64(root ^ splitmix64(index))`.
    pub fn for_trial(self, index: u64) -> Seed {
        Seed(splitmix64(self.0 ^ splitmix64(index)))
    }

    /// Independent sub-stream `k` of this seed, used when one trial needs
    /// several random objects.
    pub fn substream(self, k: u64) -> Seed {
        Seed(splitmix64(
            self.0
                .wrapping_add(0xD1B5_4A32_D192_ED03u64.wrapping_mul(k + 1)),
        ))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// One standard normal deviate by the Box–Muller transform.
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // 1 - U lies in (0, 1], so the logarithm is finite.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Complex Gaussian with independent N(0, 1/2) real and imaginary parts.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(standard_normal(rng), standard_normal(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_normal(rng);
        }
    }
    m
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix with the
/// phases of `R`'s diagonal divided out.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let qr = ginibre(d, d, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Haar-random pure state, returned as a unit vector.
pub fn random_pure_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<Complex64> {
    let v = DVector::from_iterator(d, (0..d).map(|_| complex_normal(rng)));
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

/// Haar-random pure state as a density matrix.
pub fn random_pure(layout: &HilbertLayout, seed: Seed) -> DensityMatrix {
    let mut rng = seed.rng();
    let v = random_pure_vector(layout.total_dim(), &mut rng);
    let m = &v * v.adjoint();
    DensityMatrix::from_computed(m, layout.clone()).expect("pure state has unit trace")
}

/// Full-rank state `G G† / tr(G G†)` with square Ginibre `G`, resampled until
/// its smallest eigenvalue clears `tol.rank_floor` (at most 100 attempts).
pub fn random_mixed(
    layout: &HilbertLayout,
    seed: Seed,
    tol: &ToleranceConfig,
) -> Result<DensityMatrix> {
    let d = layout.total_dim();
    let mut rng = seed.rng();
    for _ in 0..100 {
        let g = ginibre(d, d, &mut rng);
        let w = &g * g.adjoint();
        let tr = w.trace().re;
        let rho = DensityMatrix::from_computed(w / Complex64::new(tr, 0.0), layout.clone())?;
        if rho.min_eigenvalue() >= tol.rank_floor {
            return Ok(rho);
        }
    }
    Err(Error::SamplingFailed(100))
}

/// Product of independent random full-rank states, one per site.
pub fn random_product(
    layout: &HilbertLayout,
    seed: Seed,
    tol: &ToleranceConfig,
) -> Result<(DensityMatrix, Vec<DensityMatrix>)> {
    let factors = layout
        .dims()
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            random_mixed(
                &HilbertLayout::with_trivial_sites(vec![d])?,
                seed.substream(k as u64),
                tol,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((product_state(&factors)?, factors))
}

/// `(1 - eps) ρ + eps · 1/d`.
pub fn depolarize(rho: &DensityMatrix, eps: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!(
            "depolarizing weight {eps} outside [0, 1]"
        )));
    }
    let d = rho.dim();
    let m = rho.matrix() * Complex64::new(1.0 - eps, 0.0)
        + ComplexMatrix::identity(d, d) * Complex64::new(eps / d as f64, 0.0);
    DensityMatrix::from_computed(m, rho.layout().clone())
}

/// Kronecker product of single-site (or multi-site) factors in order.
pub fn product_state(factors: &[DensityMatrix]) -> Result<DensityMatrix> {
    let first = factors
        .first()
        .ok_or_else(|| Error::InvalidArgument("product of zero factors".into()))?;
    let mut m = first.matrix().clone();
    let mut dims = first.layout().dims().to_vec();
    for f in &factors[1..] {
        m = m.kronecker(f.matrix());
        dims.extend_from_slice(f.layout().dims());
    }
    DensityMatrix::from_computed(m, HilbertLayout::with_trivial_sites(dims)?)
}

/// Diagonal state with the given probabilities in the computational basis.
pub fn classical_state(probs: &[f64], layout: &HilbertLayout) -> Result<DensityMatrix> {
    if probs.len() != layout.total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} probabilities for dimension {}",
            probs.len(),
            layout.total_dim()
        )));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidProbability(format!("entry {p}")));
    }
    let s: f64 = probs.iter().sum();
    if (s - 1.0).abs() > STATE_TOL {
        return Err(Error::InvalidProbability(format!("entries sum to {s}")));
    }
    let m = ComplexMatrix::from_diagonal(&DVector::from_iterator(
        probs.len(),
        probs.iter().map(|&p| Complex64::new(p, 0.0)),
    ));
    Ok(DensityMatrix {
        matrix: m,
        layout: layout.clone(),
    })
}

/// Random probability vector with all entries at least `floor`-ish (Dirichlet(1) shifted).
pub fn random_distribution<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-3)
        .collect();
    let s: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw.iter().map(|x| x / s).collect();
    // Put the rounding residue on the largest entry so the sum is 1 to ~1e-16.
    let resid = 1.0 - p.iter().sum::<f64>();
    let (imax, _) = p.iter().enumerate().fold(
        (0, 0.0),
        |acc, (i, &x)| if x > acc.1 { (i, x) } else { acc },
    );
    p[imax] += resid;
    p
}
