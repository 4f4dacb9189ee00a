//! Quasi-factorization inequalities for the relative entropy and their error
//! terms.
//!
//! Every check returns a [`QFResult`] whose `margin` is `rhs − error_factor·D`;
//! a negative margin beyond round-off is a violation. When the error factor is
//! not positive the inequality carries no information and the result is
//! flagged as vacuous.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::{hermitize, operator_norm, trace_product, EigenSystem, ToleranceConfig};
use crate::entropy::{
    marginal_entropy, marginal_rel_entropy, mutual_information, petz_recovery, rel_entropy,
    von_neumann_entropy,
};
use crate::error::{Error, Result};
use crate::quadrature::QuadratureScheme;
use crate::states::{product_state, DensityMatrix};
use crate::tensor::{embed, tensor_regions, ComplexMatrix, Region};

/// Outcome of one quasi-factorization check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QFResult {
    /// `error_factor · D(ρ‖σ)`.
    pub lhs: f64,
    /// Sum of the conditional relative entropies.
    pub rhs: f64,
    pub error_factor: f64,
    /// `error_factor > 0`.
    pub nontrivial: bool,
    /// `rhs − error_factor · D`.
    pub margin: f64,
    /// `D(ρ‖σ)`.
    pub divergence: f64,
}

impl QFResult {
    fn new(divergence: f64, rhs: f64, error_factor: f64) -> Self {
        let lhs = error_factor * divergence;
        Self {
            lhs,
            rhs,
            error_factor,
            nontrivial: error_factor > 0.0,
            margin: rhs - lhs,
            divergence,
        }
    }
}

fn require_same_layout(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.layout() != sigma.layout() {
        return Err(Error::DimensionMismatch(
            "rho and sigma live on different layouts".into(),
        ));
    }
    Ok(())
}

/// `D(ρ‖⊗_x σ_x) ≤ Σ_x D_x(ρ‖σ)` with one factor per site and
/// `D_x = D(ρ‖σ) − D(ρ_{xᶜ}‖σ_{xᶜ})`.
pub fn verify_product_qf(rho: &DensityMatrix, sigma_factors: &[DensityMatrix]) -> Result<QFResult> {
    let layout = rho.layout();
    if sigma_factors.len() != layout.n_sites()
        || sigma_factors
            .iter()
            .zip(layout.dims())
            .any(|(f, &d)| f.dim() != d)
    {
        return Err(Error::DimensionMismatch(
            "one reference factor per site is required".into(),
        ));
    }
    let tol = ToleranceConfig::default();
    for f in sigma_factors {
        f.require_full_rank(&tol)?;
    }
    let sigma = DensityMatrix::from_computed(
        product_state(sigma_factors)?.matrix().clone(),
        layout.clone(),
    )?;
    let d = rel_entropy(rho, &sigma)?;
    let mut rhs = 0.0;
    for x in 0..layout.n_sites() {
        let rest = layout.complement(Region::site(x));
        rhs += d - marginal_rel_entropy(rho, &sigma, rest)?;
    }
    Ok(QFResult::new(d, rhs, 1.0))
}

/// `Σ_x S(ρ_{xᶜ}) − (|Λ|−1) S(ρ)`, the entropic form of [`verify_product_qf`]'s
/// margin (the reference state drops out).
pub fn shearer_margin(rho: &DensityMatrix) -> Result<f64> {
    let layout = rho.layout();
    let n = layout.n_sites();
    let mut sum = 0.0;
    for x in 0..n {
        sum += marginal_entropy(rho, layout.complement(Region::site(x)))?;
    }
    Ok(sum - (n as f64 - 1.0) * von_neumann_entropy(rho))
}

/// Three-site product reference: the quasi-factorization check plus the
/// correlation bound used to prove it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripartiteReport {
    pub result: QFResult,
    /// `I(A:BC) + I(B:AC) + I(C:AB)`.
    pub mutual_information_sum: f64,
    /// `D(ρ‖ρ_A ⊗ ρ_B ⊗ ρ_C)`.
    pub total_correlation: f64,
}

pub fn verify_tripartite_nonoverlap(
    rho: &DensityMatrix,
    sigma_factors: &[DensityMatrix],
) -> Result<TripartiteReport> {
    let layout = rho.layout();
    if layout.n_sites() != 3 {
        return Err(Error::InvalidArgument(
            "tripartite check needs a three-site layout".into(),
        ));
    }
    let result = verify_product_qf(rho, sigma_factors)?;
    let full = layout.full_region();
    let mut mi = 0.0;
    for x in 0..3 {
        let s = Region::site(x);
        mi += mutual_information(rho, s, full.difference(s))?;
    }
    let total_correlation: f64 = (0..3)
        .map(|x| marginal_entropy(rho, Region::site(x)))
        .sum::<Result<f64>>()?
        - von_neumann_entropy(rho);
    Ok(TripartiteReport {
        result,
        mutual_information_sum: mi,
        total_correlation,
    })
}

/// `‖(σ_A ⊗ σ_C)^{-1/2} σ_AC (σ_A ⊗ σ_C)^{-1/2} − 1‖_∞` for disjoint `a`, `c`.
pub fn h_error_term(sigma: &DensityMatrix, a: Region, c: Region) -> Result<f64> {
    let layout = sigma.layout();
    layout.check_region(a)?;
    layout.check_region(c)?;
    if !a.is_disjoint(c) || a.is_empty() || c.is_empty() {
        return Err(Error::InvalidRegion(
            "A and C must be non-empty and disjoint".into(),
        ));
    }
    let tol = ToleranceConfig::default();
    let ac = a.union(c);
    let sigma_ac = sigma.marginal(ac)?;
    let sub = sigma_ac.layout().clone();
    let a_rel = a.relative_to(ac)?;
    let inv_sqrt = |r: Region| -> Result<ComplexMatrix> {
        let e = EigenSystem::new(sigma.marginal(r)?.matrix())?;
        e.require_positive(&tol)?;
        Ok(e.map_real(|x| 1.0 / x.sqrt()))
    };
    let p = tensor_regions(&inv_sqrt(a)?, a_rel, &inv_sqrt(c)?, &sub)?;
    let d = sub.total_dim();
    let h = &p * sigma_ac.matrix() * &p - ComplexMatrix::identity(d, d);
    Ok(EigenSystem::new(&h)?
        .values
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// Overlapping quasi-factorization `(1 − 2‖H‖_∞) D(ρ‖σ) ≤ D_AB + D_BC`, where
/// `B = ab ∩ bc`, `A = ab ∖ B`, `C = bc ∖ B`,
/// `D_AB = D − D(ρ_C‖σ_C)` and `D_BC = D − D(ρ_A‖σ_A)`.
pub fn verify_overlap_qf(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    ab: Region,
    bc: Region,
) -> Result<QFResult> {
    require_same_layout(rho, sigma)?;
    let layout = rho.layout();
    layout.check_region(ab)?;
    layout.check_region(bc)?;
    if ab.union(bc) != layout.full_region() {
        return Err(Error::InvalidRegion(format!(
            "{ab} and {bc} must cover the layout"
        )));
    }
    let b = ab.intersection(bc);
    let a = ab.difference(b);
    let c = bc.difference(b);
    sigma.require_full_rank(&ToleranceConfig::default())?;
    let h = h_error_term(sigma, a, c)?;
    let d = rel_entropy(rho, sigma)?;
    let d_ab = d - marginal_rel_entropy(rho, sigma, c)?;
    let d_bc = d - marginal_rel_entropy(rho, sigma, a)?;
    Ok(QFResult::new(d, d_ab + d_bc, 1.0 - 2.0 * h))
}

/// `(1 + 2‖H‖_∞) D(ρ_AC‖σ_AC) − D(ρ_A‖σ_A) − D(ρ_C‖σ_C)`.
pub fn superadditivity_margin(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    a: Region,
    c: Region,
) -> Result<f64> {
    require_same_layout(rho, sigma)?;
    let h = h_error_term(sigma, a, c)?;
    let ac = a.union(c);
    Ok((1.0 + 2.0 * h) * marginal_rel_entropy(rho, sigma, ac)?
        - marginal_rel_entropy(rho, sigma, a)?
        - marginal_rel_entropy(rho, sigma, c)?)
}

/// Powers `σ^z` from a cached eigendecomposition, embedded on the full layout.
struct PowerCache {
    eig: EigenSystem,
    support: Region,
}

impl PowerCache {
    fn new(m: &ComplexMatrix, support: Region) -> Result<Self> {
        let eig = EigenSystem::new(m)?;
        eig.require_positive(&ToleranceConfig::default())?;
        Ok(Self { eig, support })
    }

    fn pow(&self, z: Complex64, sigma: &DensityMatrix) -> Result<ComplexMatrix> {
        let local = self.eig.map(|x| (z * x.ln()).exp());
        if self.support == sigma.layout().full_region() {
            Ok(local)
        } else {
            embed(&local, self.support, sigma.layout())
        }
    }
}

fn half_power(real: f64, t: f64) -> Complex64 {
    Complex64::new(real / 2.0, t / 2.0)
}

/// The two weighted integrals that make up `ξ(σ) = 2 (E₁ + E₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiTerms {
    /// `∫ β₀ ‖σ_B^{(−1+it)/2} σ^{(1−it)/2} σ_A^{(−1+it)/2} − 1‖_∞ ‖σ_A^{−1/2} σ^{(1+it)/2} σ_B^{−1/2}‖_∞ dt`.
    pub e1: f64,
    /// `∫ β₀ ‖σ_B^{(−1−it)/2} σ^{(1+it)/2} σ_A^{(−1−it)/2} − 1‖_∞ dt`.
    pub e2: f64,
    pub xi: f64,
}

/// Error term of the quasi-factorization for conditional relative entropies
/// by expectations, for the split `(a, aᶜ)`.
pub fn xi_error_term(sigma: &DensityMatrix, a: Region, quad: &QuadratureScheme) -> Result<XiTerms> {
    let layout = sigma.layout();
    layout.check_region(a)?;
    let b = layout.complement(a);
    let full = PowerCache::new(sigma.matrix(), layout.full_region())?;
    let pa = PowerCache::new(sigma.marginal(a)?.matrix(), a)?;
    let pb = PowerCache::new(sigma.marginal(b)?.matrix(), b)?;
    let d = layout.total_dim();
    let id = ComplexMatrix::identity(d, d);
    let inv_sqrt_a = pa.pow(Complex64::new(-0.5, 0.0), sigma)?;
    let inv_sqrt_b = pb.pow(Complex64::new(-0.5, 0.0), sigma)?;
    let (mut e1, mut e2) = (0.0, 0.0);
    for (t, w) in quad.beta0_weighted_nodes() {
        let s_minus = full.pow(half_power(1.0, -t), sigma)?;
        let s_plus = full.pow(half_power(1.0, t), sigma)?;
        let x1 =
            pb.pow(half_power(-1.0, t), sigma)? * &s_minus * pa.pow(half_power(-1.0, t), sigma)?
                - &id;
        let y = &inv_sqrt_a * &s_plus * &inv_sqrt_b;
        let x2 =
            pb.pow(half_power(-1.0, -t), sigma)? * &s_plus * pa.pow(half_power(-1.0, -t), sigma)?
                - &id;
        e1 += w * operator_norm(&x1) * operator_norm(&y);
        e2 += w * operator_norm(&x2);
    }
    Ok(XiTerms {
        e1,
        e2,
        xi: 2.0 * (e1 + e2),
    })
}

/// `T_g(f) = ∫ β₀(t) g^{(−1−it)/2} f g^{(−1+it)/2} dt` for positive definite `g`.
pub fn lieb_operator(
    g: &ComplexMatrix,
    f: &ComplexMatrix,
    quad: &QuadratureScheme,
) -> Result<ComplexMatrix> {
    if g.shape() != f.shape() {
        return Err(Error::DimensionMismatch(
            "T_g(f) needs operators of equal size".into(),
        ));
    }
    let eig = EigenSystem::new(g)?;
    eig.require_positive(&ToleranceConfig::default())?;
    // In the eigenbasis of g the integral acts entrywise, but summing the
    // matrices node by node keeps this a direct transcription of the integral.
    let f_rot = eig.vectors.adjoint() * f * &eig.vectors;
    let logs: Vec<f64> = eig.values.iter().map(|x| x.ln()).collect();
    let n = logs.len();
    let mut acc = ComplexMatrix::zeros(n, n);
    for (t, w) in quad.beta0_weighted_nodes() {
        for j in 0..n {
            for i in 0..n {
                let left = (half_power(-1.0, -t) * logs[i]).exp();
                let right = (half_power(-1.0, t) * logs[j]).exp();
                acc[(i, j)] += f_rot[(i, j)] * left * right * w;
            }
        }
    }
    Ok(&eig.vectors * acc * eig.vectors.adjoint())
}

/// `T_g(f) = ∫₀^∞ (g+s)^{-1} f (g+s)^{-1} ds` evaluated with the substitution
/// `s = e^y` and composite Gauss–Legendre panels, inverting `g + s` by LU.
pub fn lieb_operator_resolvent(g: &ComplexMatrix, f: &ComplexMatrix) -> Result<ComplexMatrix> {
    if g.shape() != f.shape() {
        return Err(Error::DimensionMismatch(
            "T_g(f) needs operators of equal size".into(),
        ));
    }
    let eig = EigenSystem::new(g)?;
    eig.require_positive(&ToleranceConfig::default())?;
    let lo = eig.min().ln() - 40.0;
    let hi = eig.max().ln() + 40.0;
    let panels = ((hi - lo) / 0.5).ceil() as usize;
    let (x, wts) = crate::quadrature::gauss_legendre(16);
    let h = (hi - lo) / panels as f64;
    let n = g.nrows();
    let mut acc = ComplexMatrix::zeros(n, n);
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * h;
        for (xi, wi) in x.iter().zip(&wts) {
            let y = mid + 0.5 * h * xi;
            let s = y.exp();
            let shifted = g + ComplexMatrix::identity(n, n) * Complex64::new(s, 0.0);
            let inv = shifted
                .try_inverse()
                .ok_or_else(|| Error::NonFinite("singular resolvent".into()))?;
            acc += (&inv * f * &inv) * Complex64::new(0.5 * h * wi * s, 0.0);
        }
    }
    Ok(acc)
}

/// Both sides of `tr exp(−f + g + h) ≤ tr[e^h T_{e^f}(e^g)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiebCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

pub fn lieb_trace_inequality(
    f: &ComplexMatrix,
    g: &ComplexMatrix,
    h: &ComplexMatrix,
    quad: &QuadratureScheme,
) -> Result<LiebCheck> {
    let sum = hermitize(&(g + h - f));
    let lhs: f64 = EigenSystem::new(&sum)?.values.iter().map(|x| x.exp()).sum();
    let exp = |m: &ComplexMatrix| -> Result<ComplexMatrix> {
        Ok(EigenSystem::new(m)?.map_real(f64::exp))
    };
    let t = lieb_operator(&exp(f)?, &exp(g)?, quad)?;
    let rhs = trace_product(&exp(h)?, &t).re;
    Ok(LiebCheck {
        lhs,
        rhs,
        margin: rhs - lhs,
    })
}

/// Every quantity in the proof chain of the quasi-factorization for
/// conditional relative entropies by expectations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationReport {
    /// `(1 − ξ) D ≤ D_A^E + D_B^E`.
    pub result: QFResult,
    pub d_a_exp: f64,
    pub d_b_exp: f64,
    /// `log tr exp[−log σ + log E*_A(ρ) + log E*_B(ρ)]`.
    pub log_tr_m: f64,
    /// `D_A^E + D_B^E + log tr M − D`.
    pub split_margin: f64,
    /// `tr[E*_A(ρ) T_σ(E*_B(ρ))] − tr M`.
    pub lieb_margin: f64,
    /// `∫ β₀(t) tr[T_B σ^{(1−it)/2} T_A σ^{(1+it)/2}] dt`.
    pub deviation_integral: f64,
    /// `deviation_integral − log tr M`.
    pub deviation_margin: f64,
    /// `ξ D − log tr M`; reported only, the operator-norm estimates behind it
    /// are not checked as part of the pass/fail decision.
    pub xi_bound_margin: f64,
    pub xi: XiTerms,
}

pub fn verify_expectation_qf(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    a: Region,
    quad: &QuadratureScheme,
) -> Result<ExpectationReport> {
    require_same_layout(rho, sigma)?;
    let layout = rho.layout();
    layout.check_region(a)?;
    let b = layout.complement(a);
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidRegion(
            "both halves of the split must be non-empty".into(),
        ));
    }
    let tol = ToleranceConfig::default();
    let es = sigma.eigen();
    es.require_positive(&tol)?;
    let d = rel_entropy(rho, sigma)?;
    let rec_a = petz_recovery(rho, sigma, a)?;
    let rec_b = petz_recovery(rho, sigma, b)?;
    let d_a_exp = rel_entropy(rho, &rec_a)?;
    let d_b_exp = rel_entropy(rho, &rec_b)?;

    let log_sigma = es.log(&tol)?;
    let log_a = rec_a.eigen().log(&tol)?;
    let log_b = rec_b.eigen().log(&tol)?;
    let exponent = EigenSystem::new(&hermitize(&(log_a - &log_sigma + log_b)))?;
    let top = exponent.max();
    let log_tr_m = top
        + exponent
            .values
            .iter()
            .map(|x| (x - top).exp())
            .sum::<f64>()
            .ln();
    let tr_m = log_tr_m.exp();

    let lieb_rhs = trace_product(
        rec_a.matrix(),
        &lieb_operator(sigma.matrix(), rec_b.matrix(), quad)?,
    )
    .re;

    let deviation = |r: Region| -> Result<ComplexMatrix> {
        let s = sigma.marginal(r)?;
        let e = EigenSystem::new(s.matrix())?;
        let inv_sqrt = e.map_real(|x| 1.0 / x.sqrt());
        let dev = rho.marginal(r)?.matrix() - s.matrix();
        embed(&(&inv_sqrt * dev * &inv_sqrt), r, layout)
    };
    let t_a = deviation(a)?;
    let t_b = deviation(b)?;
    let full = PowerCache::new(sigma.matrix(), layout.full_region())?;
    let mut deviation_integral = 0.0;
    for (t, w) in quad.beta0_weighted_nodes() {
        let left = full.pow(half_power(1.0, -t), sigma)?;
        let right = full.pow(half_power(1.0, t), sigma)?;
        deviation_integral += w * trace_product(&(&t_b * left * &t_a), &right).re;
    }

    let xi = xi_error_term(sigma, a, quad)?;
    Ok(ExpectationReport {
        result: QFResult::new(d, d_a_exp + d_b_exp, 1.0 - xi.xi),
        d_a_exp,
        d_b_exp,
        log_tr_m,
        split_margin: d_a_exp + d_b_exp + log_tr_m - d,
        lieb_margin: lieb_rhs - tr_m,
        deviation_integral,
        deviation_margin: deviation_integral - log_tr_m,
        xi_bound_margin: xi.xi * d - log_tr_m,
        xi,
    })
}
