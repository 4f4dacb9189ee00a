//! Entropies, relative entropies and the two conditional relative entropies.
//!
//! Throughout, the "conditioning region" `a` is the region that is traced out:
//! `D_A(ρ‖σ) = D(ρ‖σ) − D(ρ_B‖σ_B)` with `B` the complement of `a`, and
//! `D_A^E(ρ‖σ) = D(ρ‖E*_A(ρ))` with `E*_A` the Petz recovery of `tr_A`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::{mat_pow, EigenSystem, ToleranceConfig};
use crate::error::{Error, Result};
use crate::states::DensityMatrix;
use crate::tensor::{embed, kron, partial_trace, ComplexMatrix, HilbertLayout, Region};

/// Relative entropy together with finiteness information. An unsupported pair
/// reports `value = +∞` instead of failing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub value: f64,
    pub finite: bool,
    pub support_ok: bool,
}

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

fn same_layout(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.layout() != b.layout() {
        return Err(Error::DimensionMismatch(format!(
            "layouts {:?} and {:?} differ",
            a.layout().dims(),
            b.layout().dims()
        )));
    }
    Ok(())
}

/// `S(ρ) = −tr ρ log ρ` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    -rho.eigen().values.iter().map(|&x| xlogx(x)).sum::<f64>()
}

/// Entropy of the marginal on `region` (zero for the empty region).
pub fn marginal_entropy(rho: &DensityMatrix, region: Region) -> Result<f64> {
    if region.is_empty() {
        return Ok(0.0);
    }
    Ok(von_neumann_entropy(&rho.marginal(region)?))
}

/// Eigenvalues of a unit-trace operator below this are round-off zeros when
/// deciding support inclusion.
pub const SUPPORT_FLOOR: f64 = 1e-15;

/// Umegaki relative entropy `tr ρ (log ρ − log σ)`.
///
/// The pair is unsupported (value `+∞`) when `ρ` puts weight above the rank
/// floor on an eigenvector of `σ` whose eigenvalue is below [`SUPPORT_FLOOR`].
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<EntropyReport> {
    same_layout(rho, sigma)?;
    let weight_floor = ToleranceConfig::default().rank_floor;
    let er = rho.eigen();
    let es = sigma.eigen();
    let neg_entropy: f64 = er.values.iter().map(|&x| xlogx(x)).sum();
    // Populations of ρ in the eigenbasis of σ.
    let rotated = es.vectors.adjoint() * rho.matrix() * &es.vectors;
    let mut cross = 0.0;
    for (j, &mu) in es.values.iter().enumerate() {
        let p = rotated[(j, j)].re;
        if mu < SUPPORT_FLOOR {
            if p > weight_floor {
                return Ok(EntropyReport {
                    value: f64::INFINITY,
                    finite: false,
                    support_ok: false,
                });
            }
            continue;
        }
        cross += p * mu.ln();
    }
    let value = neg_entropy - cross;
    Ok(EntropyReport {
        value,
        finite: value.is_finite(),
        support_ok: true,
    })
}

/// Relative entropy as a plain number; infinite values are an error.
pub fn rel_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let r = relative_entropy(rho, sigma)?;
    if !r.support_ok {
        return Err(Error::SupportMismatch);
    }
    if !r.finite {
        return Err(Error::NonFinite("relative entropy".into()));
    }
    Ok(r.value)
}

/// `D(ρ_R‖σ_R)` for a region `R` (zero for the empty region).
pub fn marginal_rel_entropy(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    region: Region,
) -> Result<f64> {
    if region.is_empty() {
        return Ok(0.0);
    }
    rel_entropy(&rho.marginal(region)?, &sigma.marginal(region)?)
}

fn check_disjoint(regions: &[Region], layout: &HilbertLayout) -> Result<()> {
    let mut seen = Region::empty();
    for &r in regions {
        layout.check_region(r)?;
        if !r.is_disjoint(seen) {
            return Err(Error::InvalidRegion(format!("{r} overlaps another region")));
        }
        seen = seen.union(r);
    }
    Ok(())
}

/// `I(A:B) = S(A) + S(B) − S(AB)`.
pub fn mutual_information(rho: &DensityMatrix, a: Region, b: Region) -> Result<f64> {
    check_disjoint(&[a, b], rho.layout())?;
    Ok(marginal_entropy(rho, a)? + marginal_entropy(rho, b)? - marginal_entropy(rho, a.union(b))?)
}

/// `S(A|B) = S(AB) − S(B)`.
pub fn conditional_entropy(rho: &DensityMatrix, a: Region, b: Region) -> Result<f64> {
    check_disjoint(&[a, b], rho.layout())?;
    Ok(marginal_entropy(rho, a.union(b))? - marginal_entropy(rho, b)?)
}

/// `I(A:C|B) = S(AB) + S(BC) − S(B) − S(ABC)`.
pub fn conditional_mutual_information(
    rho: &DensityMatrix,
    a: Region,
    b: Region,
    c: Region,
) -> Result<f64> {
    check_disjoint(&[a, b, c], rho.layout())?;
    Ok(
        marginal_entropy(rho, a.union(b))? + marginal_entropy(rho, b.union(c))?
            - marginal_entropy(rho, b)?
            - marginal_entropy(rho, a.union(b).union(c))?,
    )
}

/// Square root of σ and inverse square root of its marginal on the complement
/// of `a`, embedded on the full layout.
struct PetzFactors {
    sqrt_sigma: ComplexMatrix,
    inv_sqrt_sigma_b: ComplexMatrix,
    b: Region,
}

impl PetzFactors {
    fn new(sigma: &DensityMatrix, a: Region) -> Result<Self> {
        let tol = ToleranceConfig::default();
        let layout = sigma.layout();
        layout.check_region(a)?;
        let b = layout.complement(a);
        let es = sigma.eigen();
        es.require_positive(&tol)?;
        let sqrt_sigma = es.map_real(f64::sqrt);
        let sigma_b = partial_trace(sigma.matrix(), layout, a)?;
        let eb = EigenSystem::new(&sigma_b)?;
        eb.require_positive(&tol)?;
        let inv_sqrt_sigma_b = eb.map_real(|x| 1.0 / x.sqrt());
        Ok(Self {
            sqrt_sigma,
            inv_sqrt_sigma_b,
            b,
        })
    }

    /// `σ^{1/2} (1_A ⊗ σ_B^{-1/2} ω_B σ_B^{-1/2}) σ^{1/2}`.
    fn recover(&self, omega_b: &ComplexMatrix, layout: &HilbertLayout) -> Result<ComplexMatrix> {
        let inner = &self.inv_sqrt_sigma_b * omega_b * &self.inv_sqrt_sigma_b;
        let lifted = embed(&inner, self.b, layout)?;
        Ok(&self.sqrt_sigma * lifted * &self.sqrt_sigma)
    }
}

/// Minimal conditional expectation in the Heisenberg picture,
/// `E_A(f) = σ_B^{-1/2} tr_A[σ^{1/2} f σ^{1/2}] σ_B^{-1/2}`, returned as an
/// operator on the complement of `a`. It is the Hilbert–Schmidt adjoint of
/// [`petz_recovery`].
pub fn min_cond_expectation(
    f: &ComplexMatrix,
    sigma: &DensityMatrix,
    a: Region,
) -> Result<ComplexMatrix> {
    let layout = sigma.layout();
    if f.shape() != (layout.total_dim(), layout.total_dim()) {
        return Err(Error::DimensionMismatch(
            "observable does not match sigma".into(),
        ));
    }
    let pf = PetzFactors::new(sigma, a)?;
    let sandwiched = &pf.sqrt_sigma * f * &pf.sqrt_sigma;
    let reduced = partial_trace(&sandwiched, layout, a)?;
    Ok(&pf.inv_sqrt_sigma_b * reduced * &pf.inv_sqrt_sigma_b)
}

/// Petz recovery `E*_A(ρ) = σ^{1/2} σ_B^{-1/2} ρ_B σ_B^{-1/2} σ^{1/2}` of the
/// partial trace over `a`.
pub fn petz_recovery(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    a: Region,
) -> Result<DensityMatrix> {
    same_layout(rho, sigma)?;
    let pf = PetzFactors::new(sigma, a)?;
    let rho_b = partial_trace(rho.matrix(), rho.layout(), a)?;
    DensityMatrix::from_computed(pf.recover(&rho_b, sigma.layout())?, sigma.layout().clone())
}

/// A state with vanishing conditional relative entropies with respect to `σ`
/// and conditioning region `a`, built from `τ`.
///
/// `E*_A` only leaves `ρ` invariant when `ρ_B` is a fixed point of
/// `Φ = tr_A ∘ E*_A`, so `τ_B` is first projected onto those fixed points
/// (the limit of `Φ^n`, obtained by repeatedly squaring the superoperator of
/// `Φ`) and then recovered. For product `σ` this is just `σ_A ⊗ τ_B`.
pub fn markov_state(
    tau: &DensityMatrix,
    sigma: &DensityMatrix,
    a: Region,
) -> Result<DensityMatrix> {
    same_layout(tau, sigma)?;
    let layout = sigma.layout();
    let pf = PetzFactors::new(sigma, a)?;
    let db = layout.region_dim(pf.b);
    if db > 16 {
        return Err(Error::InvalidArgument(
            "markov_state supports complements of dimension <= 16".into(),
        ));
    }
    let n = db * db;
    let mut phi = ComplexMatrix::zeros(n, n);
    for l in 0..db {
        for k in 0..db {
            let mut basis = ComplexMatrix::zeros(db, db);
            basis[(k, l)] = Complex64::new(1.0, 0.0);
            let image = partial_trace(&pf.recover(&basis, layout)?, layout, a)?;
            for j in 0..db {
                for i in 0..db {
                    phi[(i + j * db, k + l * db)] = image[(i, j)];
                }
            }
        }
    }
    // Φ is self-adjoint and positive in the KMS geometry of σ_B. Conjugating
    // by Y ↦ σ_B^{1/4} Y σ_B^{1/4} makes it Hermitian, and the fixed-point
    // projection is the spectral projector onto eigenvalue 1.
    let tol = ToleranceConfig::default();
    let sigma_b = partial_trace(sigma.matrix(), layout, a)?;
    let quarter = mat_pow(&sigma_b, 0.25, &tol)?;
    let inv_quarter = mat_pow(&sigma_b, -0.25, &tol)?;
    let conj = kron(&quarter.transpose(), &quarter);
    let inv_conj = kron(&inv_quarter.transpose(), &inv_quarter);
    let sym = EigenSystem::new(&(&inv_conj * &phi * &conj))?;
    let mut proj = ComplexMatrix::zeros(n, n);
    for (k, &lambda) in sym.values.iter().enumerate() {
        if lambda > 1.0 - 1e-8 {
            let col = sym.vectors.column(k);
            proj += col * col.adjoint();
        }
    }
    let phi = &conj * proj * &inv_conj;
    let tau_b = partial_trace(tau.matrix(), layout, a)?;
    let v = ComplexMatrix::from_fn(n, 1, |idx, _| tau_b[(idx % db, idx / db)]);
    let pv = &phi * v;
    let projected = ComplexMatrix::from_fn(db, db, |i, j| pv[(i + j * db, 0)]);
    DensityMatrix::from_computed(pf.recover(&projected, layout)?, layout.clone())
}

/// `D_A(ρ‖σ) = D(ρ‖σ) − D(ρ_B‖σ_B)`, `B` the complement of `a`.
pub fn cond_rel_entropy(rho: &DensityMatrix, sigma: &DensityMatrix, a: Region) -> Result<f64> {
    same_layout(rho, sigma)?;
    sigma.require_full_rank(&ToleranceConfig::default())?;
    let b = rho.layout().complement(a);
    rho.layout().check_region(a)?;
    Ok(rel_entropy(rho, sigma)? - marginal_rel_entropy(rho, sigma, b)?)
}

/// `D_A^E(ρ‖σ) = D(ρ‖E*_A(ρ))`.
pub fn cond_rel_entropy_expectation(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    a: Region,
) -> Result<f64> {
    let recovered = petz_recovery(rho, sigma, a)?;
    rel_entropy(rho, &recovered)
}

/// Three disjoint regions `A`, `B`, `C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tripartition {
    pub a: Region,
    pub b: Region,
    pub c: Region,
}

impl Tripartition {
    pub fn new(a: Region, b: Region, c: Region) -> Result<Self> {
        if !a.is_disjoint(b) || !a.is_disjoint(c) || !b.is_disjoint(c) {
            return Err(Error::InvalidRegion("tripartition regions overlap".into()));
        }
        Ok(Self { a, b, c })
    }

    /// Sites 0, 1, 2 of a three-site layout.
    pub fn sites() -> Self {
        Self {
            a: Region::site(0),
            b: Region::site(1),
            c: Region::site(2),
        }
    }

    pub fn all(&self) -> Region {
        self.a.union(self.b).union(self.c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ordering {
    CmiLarger,
    PetzLarger,
    Equal,
}

/// Comparison between `I(A:C|B)` and the divergence from the rotated Petz map
/// `D(ρ‖ρ_BC^{1/2} ρ_B^{-1/2} ρ_AB ρ_B^{-1/2} ρ_BC^{1/2})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub cmi: f64,
    pub petz_divergence: f64,
    pub finite: bool,
    pub ordering: Ordering,
}

impl ComparisonRecord {
    pub fn difference(&self) -> f64 {
        self.cmi - self.petz_divergence
    }
}

/// Both quantities are conditional relative entropies with respect to
/// `σ = 1_A/d_A ⊗ ρ_BC` and conditioning region `C`: the first is `D_C`, the
/// second `D_C^E`. Differences below `tie_tol` count as equal.
pub fn compare_definitions(
    rho: &DensityMatrix,
    parts: Tripartition,
    tie_tol: f64,
) -> Result<ComparisonRecord> {
    let layout = rho.layout();
    let parts = Tripartition::new(parts.a, parts.b, parts.c)?;
    check_disjoint(&[parts.a, parts.b, parts.c], layout)?;
    if parts.a.is_empty() || parts.c.is_empty() {
        return Err(Error::InvalidRegion("A and C must be non-empty".into()));
    }
    let all = parts.all();
    let rho = if all == layout.full_region() {
        rho.clone()
    } else {
        rho.marginal(all)?
    };
    let sub = rho.layout().clone();
    let a = parts.a.relative_to(all)?;
    let c = parts.c.relative_to(all)?;
    let bc = sub.complement(a);
    let rho_bc = rho.marginal(bc)?;
    let max_mixed_a = DensityMatrix::maximally_mixed(&sub.sub_layout(a));
    let sigma = max_mixed_a.tensor_with(a, &rho_bc, &sub)?;
    let cmi = conditional_mutual_information(&rho, a, parts.b.relative_to(all)?, c)?;
    let recovered = petz_recovery(&rho, &sigma, c)?;
    let report = relative_entropy(&rho, &recovered)?;
    let diff = cmi - report.value;
    let ordering = if !report.finite || diff.abs() <= tie_tol {
        if report.finite {
            Ordering::Equal
        } else {
            Ordering::PetzLarger
        }
    } else if diff > 0.0 {
        Ordering::CmiLarger
    } else {
        Ordering::PetzLarger
    };
    Ok(ComparisonRecord {
        cmi,
        petz_divergence: report.value,
        finite: report.finite,
        ordering,
    })
}
