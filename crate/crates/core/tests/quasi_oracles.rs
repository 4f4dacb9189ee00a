use qfactor::calculus::{EigenSystem, ToleranceConfig};
use qfactor::campaign::correlated_reference;
use qfactor::quadrature::QuadratureScheme;
use qfactor::quasi::*;
use qfactor::states::*;
use qfactor::tensor::{max_abs, ComplexMatrix};
use qfactor::{DensityMatrix, HilbertLayout, Region, Seed};

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn qubits(n: usize) -> HilbertLayout {
    HilbertLayout::qubits(n).unwrap()
}

/// β₀ written out directly, independent of the library kernel.
fn kernel(t: f64) -> f64 {
    std::f64::consts::FRAC_PI_2 / ((std::f64::consts::PI * t).cosh() + 1.0)
}

/// Composite trapezoid on [−T, T].
fn trapezoid(f: impl Fn(f64) -> f64, half_width: f64, steps: usize) -> f64 {
    let h = 2.0 * half_width / steps as f64;
    let inner: f64 = (1..steps).map(|k| f(-half_width + k as f64 * h)).sum();
    h * (inner + 0.5 * (f(-half_width) + f(half_width)))
}

#[test]
fn xi_for_a_classical_reference_matches_a_scalar_trapezoid() {
    // For diagonal σ every operator in the error integrals is diagonal with
    // entries √r e^{±it ln r / 2}, r = p(a,b) / (p(a) p(b)).
    let p = [0.3, 0.2, 0.15, 0.35];
    let sigma = classical_state(&p, &qubits(2)).unwrap();
    let pa = [p[0] + p[1], p[2] + p[3]];
    let pb = [p[0] + p[2], p[1] + p[3]];
    let ratios: Vec<f64> = (0..4).map(|k| p[k] / (pa[k / 2] * pb[k % 2])).collect();
    let deviation = |t: f64| {
        ratios
            .iter()
            .map(|r| {
                let (s, phase) = (r.sqrt(), 0.5 * t * r.ln());
                ((s * phase.cos() - 1.0).powi(2) + (s * phase.sin()).powi(2)).sqrt()
            })
            .fold(0.0, f64::max)
    };
    let largest = ratios.iter().map(|r| r.sqrt()).fold(0.0, f64::max);
    let e2 = trapezoid(|t| kernel(t) * deviation(t), 12.0, 240_000);
    let e1 = largest * e2;
    let xi = xi_error_term(&sigma, Region::site(0), &QuadratureScheme::default()).unwrap();
    assert!((xi.e1 - e1).abs() < 1e-9, "{} vs {e1}", xi.e1);
    assert!((xi.e2 - e2).abs() < 1e-9, "{} vs {e2}", xi.e2);
    assert!((xi.xi - 2.0 * (e1 + e2)).abs() < 1e-9);
}

#[test]
fn xi_is_stable_under_quadrature_refinement() {
    let sigma = random_mixed(&qubits(2), Seed(3), &tol()).unwrap();
    let coarse = xi_error_term(&sigma, Region::site(0), &QuadratureScheme::default()).unwrap();
    let fine = xi_error_term(
        &sigma,
        Region::site(0),
        &QuadratureScheme::new(12.0, 480, 16).unwrap(),
    )
    .unwrap();
    assert!((coarse.xi - fine.xi).abs() < 1e-9);
}

#[test]
fn lieb_operator_matches_divided_differences() {
    // In the eigenbasis of g, T_g(f)_{jk} = f_{jk} (ln λ_j − ln λ_k) / (λ_j − λ_k).
    let quad = QuadratureScheme::default();
    for seed in 0..10 {
        let a = ginibre(6, 6, &mut Seed(seed).rng());
        let b = ginibre(6, 6, &mut Seed(50 + seed).rng());
        let g = &a * a.adjoint()
            + ComplexMatrix::identity(6, 6) * num_complex::Complex64::new(0.05, 0.0);
        let f = &b + b.adjoint();
        let e = EigenSystem::new(&g).unwrap();
        let l = &e.values;
        let local = e.vectors.adjoint() * &f * &e.vectors;
        let weighted = ComplexMatrix::from_fn(6, 6, |j, k| {
            let w = if (l[j] - l[k]).abs() <= 1e-12 * l[j] {
                1.0 / l[j]
            } else {
                (l[j].ln() - l[k].ln()) / (l[j] - l[k])
            };
            local[(j, k)] * w
        });
        let exact = &e.vectors * weighted * e.vectors.adjoint();
        let scale = max_abs(&exact);
        assert!(max_abs(&(lieb_operator(&g, &f, &quad).unwrap() - &exact)) < 1e-11 * scale);
        assert!(max_abs(&(lieb_operator_resolvent(&g, &f).unwrap() - &exact)) < 1e-9 * scale);
    }
}

#[test]
fn lieb_inequality_is_tight_for_commuting_triples() {
    let quad = QuadratureScheme::default();
    let diag = |v: [f64; 4]| {
        ComplexMatrix::from_fn(4, 4, |i, j| if i == j { v[i].into() } else { 0.0.into() })
    };
    let check = lieb_trace_inequality(
        &diag([0.1, -0.3, 0.7, 0.0]),
        &diag([1.0, 0.2, -0.5, 0.3]),
        &diag([0.0, 0.4, 0.1, -1.0]),
        &quad,
    )
    .unwrap();
    assert!(check.margin.abs() < 1e-12 * check.lhs);
}

#[test]
fn tripartite_identity_links_mutual_information_and_total_correlation() {
    let layout = qubits(3);
    for seed in 0..20 {
        let rho = random_mixed(&layout, Seed(seed), &tol()).unwrap();
        let (_, factors) = random_product(&layout, Seed(100 + seed), &tol()).unwrap();
        let rep = verify_tripartite_nonoverlap(&rho, &factors).unwrap();
        let shearer = shearer_margin(&rho).unwrap();
        assert!((rep.mutual_information_sum - rep.total_correlation - shearer).abs() < 1e-11);
        assert!((rep.result.margin - shearer).abs() < 1e-10);
        assert!(rep.total_correlation >= -1e-12);
    }
}

#[test]
fn h_term_of_a_product_reference_vanishes_and_overlap_bound_reduces() {
    let layout = qubits(3);
    let (sigma, _) = random_product(&layout, Seed(7), &tol()).unwrap();
    assert!(h_error_term(&sigma, Region::site(0), Region::site(2)).unwrap() < 1e-12);
    let rho = random_mixed(&layout, Seed(8), &tol()).unwrap();
    let r = verify_overlap_qf(
        &rho,
        &sigma,
        Region::from_sites(&[0, 1]),
        Region::from_sites(&[1, 2]),
    )
    .unwrap();
    assert!((r.error_factor - 1.0).abs() < 1e-12);
    assert!(r.margin >= -1e-10);
}

#[test]
fn superadditivity_holds_with_the_correction() {
    let layout = qubits(3);
    for seed in 0..30 {
        let sigma = correlated_reference(&layout, Seed(seed)).unwrap();
        let rho = random_mixed(&layout, Seed(200 + seed), &tol()).unwrap();
        let m = superadditivity_margin(&rho, &sigma, Region::site(0), Region::site(2)).unwrap();
        assert!(m >= -1e-10, "seed {seed}: {m}");
    }
}

#[test]
fn expectation_chain_on_a_product_reference() {
    // ξ vanishes, so the final inequality is D ≤ D_A^E + D_B^E.
    let layout = qubits(2);
    let (sigma, _) = random_product(&layout, Seed(30), &tol()).unwrap();
    let rho = random_mixed(&layout, Seed(31), &tol()).unwrap();
    let r =
        verify_expectation_qf(&rho, &sigma, Region::site(0), &QuadratureScheme::default()).unwrap();
    assert!(r.xi.xi < 1e-10);
    assert!(r.result.nontrivial && r.result.margin >= -1e-10);
    assert!(r.split_margin >= -1e-10 && r.lieb_margin >= -1e-10 && r.deviation_margin >= -1e-10);
}

#[test]
fn rank_deficient_reference_is_rejected() {
    let layout = qubits(2);
    let pure = random_pure(&layout, Seed(1));
    let rho = random_mixed(&layout, Seed(2), &tol()).unwrap();
    assert!(
        verify_expectation_qf(&rho, &pure, Region::site(0), &QuadratureScheme::default()).is_err()
    );
    let sigma = DensityMatrix::maximally_mixed(&layout);
    assert!(verify_overlap_qf(&rho, &sigma, Region::site(0), Region::site(0)).is_err());
}
