use qfactor::calculus::{trace_norm, trace_product, ToleranceConfig};
use qfactor::entropy::*;
use qfactor::states::*;
use qfactor::tensor::{identity, max_abs, partial_trace, ComplexMatrix};
use qfactor::{DensityMatrix, HilbertLayout, Region, Seed};

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn qubits(n: usize) -> HilbertLayout {
    HilbertLayout::qubits(n).unwrap()
}

fn mixed(n: usize, seed: u64) -> DensityMatrix {
    random_mixed(&qubits(n), Seed(seed), &tol()).unwrap()
}

fn rotate(rho: &DensityMatrix, u: &ComplexMatrix) -> DensityMatrix {
    DensityMatrix::new(u * rho.matrix() * u.adjoint(), rho.layout().clone()).unwrap()
}

#[test]
fn mean_purity_of_square_ginibre_states() {
    // Induced measure with an environment of equal size: E tr ρ² = 2d / (d² + 1).
    for (n, samples) in [(1usize, 6000u64), (2, 4000)] {
        let d = 1usize << n;
        let expected = 2.0 * d as f64 / (d * d + 1) as f64;
        let purities: Vec<f64> = (0..samples)
            .map(|i| {
                let m = mixed(n, 1_000 * n as u64 + i).matrix().clone();
                trace_product(&m, &m).re
            })
            .collect();
        let mean = purities.iter().sum::<f64>() / samples as f64;
        let var = purities.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
        let stderr = (var / samples as f64).sqrt();
        assert!(
            (mean - expected).abs() < 5.0 * stderr,
            "d={d}: mean {mean}, expected {expected}, stderr {stderr}"
        );
    }
}

#[test]
fn classical_entropies_match_shannon_formulas() {
    let p = [0.1, 0.2, 0.3, 0.4];
    let q = [0.25, 0.25, 0.4, 0.1];
    let layout = qubits(2);
    let rho = classical_state(&p, &layout).unwrap();
    let sigma = classical_state(&q, &layout).unwrap();
    let shannon: f64 = p.iter().map(|x| -x * x.ln()).sum();
    assert!((von_neumann_entropy(&rho) - shannon).abs() < 1e-13);
    let kl: f64 = p.iter().zip(&q).map(|(a, b)| a * (a / b).ln()).sum();
    assert!((rel_entropy(&rho, &sigma).unwrap() - kl).abs() < 1e-13);
    // Marginal on the first qubit sums over the second index.
    let first = [p[0] + p[1], p[2] + p[3]];
    let h_first: f64 = first.iter().map(|x| -x * x.ln()).sum();
    assert!((marginal_entropy(&rho, Region::site(0)).unwrap() - h_first).abs() < 1e-13);
    let second = [p[0] + p[2], p[1] + p[3]];
    let h_second: f64 = second.iter().map(|x| -x * x.ln()).sum();
    let mi = h_first + h_second - shannon;
    assert!(
        (mutual_information(&rho, Region::site(0), Region::site(1)).unwrap() - mi).abs() < 1e-13
    );
}

#[test]
fn data_processing_under_partial_trace() {
    for seed in 0..30 {
        let rho = mixed(3, seed);
        let sigma = mixed(3, 500 + seed);
        let full = rel_entropy(&rho, &sigma).unwrap();
        for kept in 1..7u64 {
            let part = marginal_rel_entropy(&rho, &sigma, Region(kept)).unwrap();
            assert!(
                part <= full + 1e-12,
                "seed {seed} region {kept}: {part} > {full}"
            );
        }
    }
}

#[test]
fn relative_entropy_is_unitarily_invariant() {
    for seed in 0..20 {
        let rho = mixed(2, seed);
        let sigma = mixed(2, 100 + seed);
        let u = random_unitary(4, &mut Seed(200 + seed).rng());
        let before = rel_entropy(&rho, &sigma).unwrap();
        let after = rel_entropy(&rotate(&rho, &u), &rotate(&sigma, &u)).unwrap();
        assert!((before - after).abs() < 1e-11);
        assert!((von_neumann_entropy(&rho) - von_neumann_entropy(&rotate(&rho, &u))).abs() < 1e-12);
    }
}

#[test]
fn pinsker_and_klein() {
    for seed in 0..40 {
        let rho = mixed(2, seed);
        let sigma = mixed(2, 300 + seed);
        let d = rel_entropy(&rho, &sigma).unwrap();
        let dist = trace_norm(&(rho.matrix() - sigma.matrix()));
        assert!(d >= 0.0);
        assert!(dist * dist / 2.0 <= d + 1e-12, "seed {seed}");
    }
    let rho = mixed(2, 7);
    assert!(rel_entropy(&rho, &rho).unwrap().abs() < 1e-12);
}

#[test]
fn strong_subadditivity() {
    for seed in 0..40 {
        let rho = if seed % 2 == 0 {
            mixed(3, seed)
        } else {
            random_pure(&qubits(3), Seed(seed))
        };
        let cmi =
            conditional_mutual_information(&rho, Region::site(0), Region::site(1), Region::site(2))
                .unwrap();
        assert!(cmi >= -1e-11, "seed {seed}: {cmi}");
    }
}

#[test]
fn conditioning_on_the_maximally_mixed_reference() {
    // D_A(ρ‖1/d) = ln d_A − S(A|B).
    let layout = qubits(3);
    let sigma = DensityMatrix::maximally_mixed(&layout);
    for seed in 0..10 {
        let rho = mixed(3, seed);
        for a in [Region::site(0), Region::from_sites(&[0, 2])] {
            let b = layout.complement(a);
            let lhs = cond_rel_entropy(&rho, &sigma, a).unwrap();
            let da = layout.region_dim(a) as f64;
            let rhs = da.ln() - conditional_entropy(&rho, a, b).unwrap();
            assert!((lhs - rhs).abs() < 1e-11);
        }
    }
}

#[test]
fn conditional_expectation_is_unital_and_preserves_the_reference() {
    let layout = qubits(3);
    let a = Region::site(1);
    for seed in 0..10 {
        let sigma = mixed(3, seed);
        let e = min_cond_expectation(&identity(8), &sigma, a).unwrap();
        assert!(max_abs(&(e - identity(4))) < 1e-11);
        let g = ginibre(8, 8, &mut Seed(50 + seed).rng());
        let f = &g + g.adjoint();
        let ef = min_cond_expectation(&f, &sigma, a).unwrap();
        let sigma_b = partial_trace(sigma.matrix(), &layout, a).unwrap();
        let lhs = trace_product(&sigma_b, &ef);
        let rhs = trace_product(sigma.matrix(), &f);
        assert!((lhs - rhs).norm() < 1e-11);
    }
}

#[test]
fn recovery_and_expectation_are_dual() {
    let layout = qubits(3);
    let a = Region::from_sites(&[0, 2]);
    for seed in 0..10 {
        let sigma = mixed(3, seed);
        let rho = mixed(3, 90 + seed);
        let g = ginibre(8, 8, &mut Seed(70 + seed).rng());
        let f = &g + g.adjoint();
        let recovered = petz_recovery(&rho, &sigma, a).unwrap();
        let rho_b = partial_trace(rho.matrix(), &layout, a).unwrap();
        let lhs = trace_product(recovered.matrix(), &f);
        let rhs = trace_product(&rho_b, &min_cond_expectation(&f, &sigma, a).unwrap());
        assert!((lhs - rhs).norm() < 1e-10);
    }
}

#[test]
fn recovery_is_idempotent_for_product_references() {
    let layout = qubits(3);
    for seed in 0..10 {
        let (sigma, _) = random_product(&layout, Seed(seed), &tol()).unwrap();
        let rho = mixed(3, 40 + seed);
        let a = Region::site((seed % 3) as usize);
        let once = petz_recovery(&rho, &sigma, a).unwrap();
        let twice = petz_recovery(&once, &sigma, a).unwrap();
        assert!(max_abs(&(once.matrix() - twice.matrix())) < 1e-11);
        // With a product reference the recovery is σ_A ⊗ ρ_{Aᶜ}.
        let direct = sigma
            .marginal(a)
            .unwrap()
            .tensor_with(a, &rho.trace_out(a).unwrap(), &layout)
            .unwrap();
        assert!(max_abs(&(once.matrix() - direct.matrix())) < 1e-11);
    }
}

#[test]
fn markov_states_for_generic_references_collapse_to_the_reference() {
    for seed in 0..5 {
        let sigma = mixed(2, seed);
        let tau = mixed(2, 10 + seed);
        let m = markov_state(&tau, &sigma, Region::site(0)).unwrap();
        assert!(max_abs(&(m.matrix() - sigma.matrix())) < 1e-9);
    }
}

#[test]
fn conditional_divergences_vanish_only_on_recovered_states() {
    let layout = qubits(3);
    let (sigma, _) = random_product(&layout, Seed(3), &tol()).unwrap();
    let a = Region::site(0);
    let rho = mixed(3, 4);
    let fixed = petz_recovery(&rho, &sigma, a).unwrap();
    assert!(cond_rel_entropy(&fixed, &sigma, a).unwrap().abs() < 1e-11);
    assert!(cond_rel_entropy(&rho, &sigma, a).unwrap() > 1e-4);
}

#[test]
fn compare_definitions_on_a_product_state() {
    // For ρ = ρ_A ⊗ ρ_B ⊗ ρ_C both quantities vanish.
    let layout = qubits(3);
    let (rho, _) = random_product(&layout, Seed(11), &tol()).unwrap();
    let rec = compare_definitions(&rho, Tripartition::sites(), 1e-9).unwrap();
    assert!(rec.finite);
    assert!(rec.cmi.abs() < 1e-11 && rec.petz_divergence.abs() < 1e-10);
    assert_eq!(rec.ordering, Ordering::Equal);
}
