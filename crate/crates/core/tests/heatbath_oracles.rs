use qfactor::calculus::{trace_product, ToleranceConfig};
use qfactor::entropy::rel_entropy;
use qfactor::heatbath::*;
use qfactor::states::*;
use qfactor::tensor::{max_abs, ComplexMatrix};
use qfactor::{DensityMatrix, HilbertLayout, Region, Seed};

fn tol() -> ToleranceConfig {
    ToleranceConfig::default()
}

fn generator(n: usize, seed: u64) -> HeatBathGenerator {
    let layout = HilbertLayout::qubits(n).unwrap();
    let (_, factors) = random_product(&layout, Seed(seed), &tol()).unwrap();
    HeatBathGenerator::new(factors).unwrap()
}

fn hermitian(d: usize, seed: u64) -> ComplexMatrix {
    let g = ginibre(d, d, &mut Seed(seed).rng());
    &g + g.adjoint()
}

#[test]
fn semigroup_property() {
    let gen = generator(3, 1);
    let rho = random_mixed(gen.layout(), Seed(2), &tol()).unwrap();
    let (s, t) = (0.4, 1.3);
    let direct = evolve_closed_form(&gen, &rho, s + t).unwrap();
    let stepped = evolve_closed_form(&gen, &evolve_closed_form(&gen, &rho, s).unwrap(), t).unwrap();
    assert!(max_abs(&(direct.matrix() - stepped.matrix())) < 1e-13);
}

#[test]
fn entropy_production_is_the_derivative_of_the_divergence() {
    for seed in 0..5 {
        let gen = generator(2, seed);
        let rho = random_mixed(gen.layout(), Seed(100 + seed), &tol()).unwrap();
        let h = 1e-4;
        let d =
            |t: f64| rel_entropy(&evolve_closed_form(&gen, &rho, t).unwrap(), gen.sigma()).unwrap();
        // One-sided fourth-order difference at t = 0.
        let slope = (-25.0 * d(0.0) + 48.0 * d(h) - 36.0 * d(2.0 * h) + 16.0 * d(3.0 * h)
            - 3.0 * d(4.0 * h))
            / (12.0 * h);
        let ep = entropy_production(&gen, &rho).unwrap();
        assert!(
            (slope + ep).abs() < 1e-7 * ep.max(1.0),
            "seed {seed}: slope {slope}, production {ep}"
        );
    }
}

#[test]
fn dual_is_the_hilbert_schmidt_adjoint() {
    let gen = generator(3, 4);
    let f = hermitian(8, 5);
    let m = hermitian(8, 6);
    let lhs = trace_product(&f, &gen.apply(&m).unwrap());
    let rhs = trace_product(&gen.apply_dual(&f).unwrap(), &m);
    assert!((lhs - rhs).norm() < 1e-11);
}

#[test]
fn detailed_balance_in_the_reference_inner_product() {
    // ⟨f, L g⟩_σ = tr[σ f† L(g)] is symmetric for a product fixed point.
    let gen = generator(3, 7);
    let sigma = gen.sigma().matrix();
    let f = ginibre(8, 8, &mut Seed(8).rng());
    let g = ginibre(8, 8, &mut Seed(9).rng());
    let lhs = trace_product(&(sigma * f.adjoint()), &gen.apply_dual(&g).unwrap());
    let rhs = trace_product(&(sigma * gen.apply_dual(&f).unwrap().adjoint()), &g);
    assert!((lhs - rhs).norm() < 1e-11);
}

#[test]
fn local_maps_commute_and_compose() {
    let gen = generator(3, 10);
    let m = random_mixed(gen.layout(), Seed(11), &tol())
        .unwrap()
        .matrix()
        .clone();
    let (x, y) = (Region::site(0), Region::site(2));
    let xy = gen.local_map(&gen.local_map(&m, y).unwrap(), x).unwrap();
    let yx = gen.local_map(&gen.local_map(&m, x).unwrap(), y).unwrap();
    let joint = gen.local_map(&m, x.union(y)).unwrap();
    assert!(max_abs(&(&xy - &yx)) < 1e-14);
    assert!(max_abs(&(&xy - &joint)) < 1e-14);
    let twice = gen.local_map(&gen.local_map(&m, x).unwrap(), x).unwrap();
    assert!(max_abs(&(twice - gen.local_map(&m, x).unwrap())) < 1e-14);
}

#[test]
fn three_propagators_agree() {
    let gen = generator(2, 12);
    let rho = random_mixed(gen.layout(), Seed(13), &tol()).unwrap();
    let times = [0.05, 0.5, 2.0];
    let traj = evolve_ode(&gen, &rho, &times, 1e-3).unwrap();
    for (k, &t) in times.iter().enumerate() {
        let a = evolve_closed_form(&gen, &rho, t).unwrap();
        let b = evolve_superoperator(&gen, &rho, t).unwrap();
        assert!(max_abs(&(a.matrix() - b.matrix())) < 1e-12);
        assert!(max_abs(&(a.matrix() - traj.states[k].matrix())) < 1e-10);
        assert!((traj.divergences[k] - rel_entropy(&a, gen.sigma()).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn evolution_converges_to_the_fixed_point_and_decays() {
    let gen = generator(3, 14);
    let rho = random_pure(gen.layout(), Seed(15));
    let rho = depolarize(&rho, 0.05).unwrap();
    let grid: Vec<f64> = (0..=30).map(|k| 0.2 * k as f64).collect();
    let rows = mixing_diagnostics(&gen, &rho, 0.5, &grid).unwrap();
    for w in rows.windows(2) {
        assert!(
            w[1].divergence <= w[0].divergence + 1e-13,
            "divergence must not increase"
        );
        assert!(w[1].trace_distance <= w[0].trace_distance + 1e-12);
    }
    assert!(rows.iter().all(|r| r.margin() >= -1e-10));
    let late = evolve_closed_form(&gen, &rho, 40.0).unwrap();
    assert!(max_abs(&(late.matrix() - gen.sigma().matrix())) < 1e-12);
}

#[test]
fn generator_superoperator_matches_direct_application() {
    let gen = generator(2, 16);
    let m = hermitian(4, 17);
    let sup = gen.superoperator().unwrap();
    let v = ComplexMatrix::from_fn(16, 1, |i, _| m[(i % 4, i / 4)]);
    let w = sup * v;
    let direct = gen.apply(&m).unwrap();
    let back = ComplexMatrix::from_fn(4, 4, |i, j| w[(i + 4 * j, 0)]);
    assert!(max_abs(&(back - direct)) < 1e-13);
}

#[test]
fn ls_ratio_of_a_product_perturbation() {
    // ρ = ρ₁ ⊗ σ₂: only site 0 contributes, and the conditional ratio on
    // site 0 matches the global one.
    let layout = HilbertLayout::qubits(2).unwrap();
    let (_, factors) = random_product(&layout, Seed(18), &tol()).unwrap();
    let gen = HeatBathGenerator::new(factors.clone()).unwrap();
    let one = random_mixed(&HilbertLayout::qubits(1).unwrap(), Seed(19), &tol()).unwrap();
    let rho = product_state(&[one, factors[1].clone()]).unwrap();
    let rho = DensityMatrix::new(rho.matrix().clone(), layout.clone()).unwrap();
    let global = ls_ratio(&gen, &rho).unwrap().unwrap();
    let local = conditional_ls_ratio(&gen, &rho, Region::site(0)).unwrap();
    assert!((global - local.ratio).abs() < 1e-10);
    assert!(global >= 0.5);
}

#[test]
fn global_estimate_is_reproducible() {
    let gen = generator(2, 20);
    let a = estimate_global_ls(&gen, 40, Seed(21)).unwrap();
    let b = estimate_global_ls(&gen, 40, Seed(21)).unwrap();
    assert_eq!(a, b);
    assert!(a.value <= a.sampled_min);
    assert!(a.value >= 0.5 - 1e-6);
}
