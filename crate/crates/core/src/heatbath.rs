//! Heat-bath dynamics with a product fixed point.
//!
//! The generator is `L*(ρ) = Σ_x (σ_x ⊗ ρ_{xᶜ} − ρ)`. Each local map
//! `T_x(ρ) = σ_x ⊗ ρ_{xᶜ}` is idempotent and the maps commute, so
//! `e^{t(T_x − 1)} = e^{−t} + (1 − e^{−t}) T_x` and the full propagator expands to
//! `ρ_t = Σ_{S⊆Λ} e^{−t|Λ∖S|} (1 − e^{−t})^{|S|} σ_S ⊗ ρ_{Sᶜ}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::{hermitize, trace_norm, trace_product, EigenSystem, ToleranceConfig};
use crate::entropy::{marginal_rel_entropy, rel_entropy};
use crate::error::{Error, Result};
use crate::states::{depolarize, product_state, random_mixed, random_pure, DensityMatrix, Seed};
use crate::tensor::{embed, partial_trace, tensor_regions, ComplexMatrix, HilbertLayout, Region};

/// Heat-bath generator for the fixed point `σ = ⊗_x σ_x`.
#[derive(Debug, Clone)]
pub struct HeatBathGenerator {
    layout: HilbertLayout,
    factors: Vec<DensityMatrix>,
    sigma: DensityMatrix,
    log_sigma: ComplexMatrix,
}

impl HeatBathGenerator {
    /// One full-rank single-site state per site.
    pub fn new(factors: Vec<DensityMatrix>) -> Result<Self> {
        let tol = ToleranceConfig::default();
        if factors.iter().any(|f| f.layout().n_sites() != 1) {
            return Err(Error::InvalidArgument(
                "fixed-point factors must be single-site states".into(),
            ));
        }
        for f in &factors {
            f.require_full_rank(&tol)?;
        }
        let layout = HilbertLayout::new(factors.iter().map(|f| f.dim()).collect())?;
        let sigma = DensityMatrix::from_computed(
            product_state(&factors)?.matrix().clone(),
            layout.clone(),
        )?;
        let log_sigma = sigma.eigen().log(&tol)?;
        Ok(Self {
            layout,
            factors,
            sigma,
            log_sigma,
        })
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn sigma(&self) -> &DensityMatrix {
        &self.sigma
    }

    pub fn factors(&self) -> &[DensityMatrix] {
        &self.factors
    }

    /// Smallest eigenvalue of `σ`, the product of the factor minima.
    pub fn sigma_min(&self) -> f64 {
        self.factors.iter().map(|f| f.min_eigenvalue()).product()
    }

    /// `⊗_{x∈region} σ_x` on the sub-layout of `region`.
    pub fn sigma_on(&self, region: Region) -> Result<ComplexMatrix> {
        let picked: Vec<DensityMatrix> = region
            .sites()
            .iter()
            .map(|&s| self.factors[s].clone())
            .collect();
        if picked.is_empty() {
            return Ok(ComplexMatrix::identity(1, 1));
        }
        Ok(product_state(&picked)?.matrix().clone())
    }

    fn check(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.layout() != &self.layout {
            return Err(Error::DimensionMismatch(
                "state does not match the generator layout".into(),
            ));
        }
        Ok(())
    }

    /// `T_R(m) = σ_R ⊗ tr_R(m)`.
    pub fn local_map(&self, m: &ComplexMatrix, region: Region) -> Result<ComplexMatrix> {
        if region.is_empty() {
            return Ok(m.clone());
        }
        let rest = partial_trace(m, &self.layout, region)?;
        tensor_regions(&self.sigma_on(region)?, region, &rest, &self.layout)
    }

    /// `L*(ρ) = Σ_x (T_x(ρ) − ρ)`.
    pub fn apply(&self, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut out = m * Complex64::new(-(self.layout.n_sites() as f64), 0.0);
        for x in 0..self.layout.n_sites() {
            out += self.local_map(m, Region::site(x))?;
        }
        Ok(out)
    }

    /// Heisenberg-picture generator `L(f) = Σ_x (1_x ⊗ tr_x[(σ_x ⊗ 1) f] − f)`.
    pub fn apply_dual(&self, f: &ComplexMatrix) -> Result<ComplexMatrix> {
        let mut out = f * Complex64::new(-(self.layout.n_sites() as f64), 0.0);
        for x in 0..self.layout.n_sites() {
            let r = Region::site(x);
            let weighted = embed(self.factors[x].matrix(), r, &self.layout)? * f;
            out += embed(
                &partial_trace(&weighted, &self.layout, r)?,
                self.layout.complement(r),
                &self.layout,
            )?;
        }
        Ok(out)
    }

    /// `d²×d²` matrix of `L*` acting on column-stacked vectors.
    pub fn superoperator(&self) -> Result<ComplexMatrix> {
        let d = self.layout.total_dim();
        let mut sup = ComplexMatrix::zeros(d * d, d * d);
        for l in 0..d {
            for k in 0..d {
                let mut basis = ComplexMatrix::zeros(d, d);
                basis[(k, l)] = Complex64::new(1.0, 0.0);
                let image = self.apply(&basis)?;
                for j in 0..d {
                    for i in 0..d {
                        sup[(i + j * d, k + l * d)] = image[(i, j)];
                    }
                }
            }
        }
        Ok(sup)
    }
}

/// `L*(ρ)`: Hermitian and traceless.
pub fn apply_generator(gen: &HeatBathGenerator, rho: &DensityMatrix) -> Result<ComplexMatrix> {
    gen.check(rho)?;
    gen.apply(rho.matrix())
}

/// Exact propagator from the subset expansion.
pub fn evolve_closed_form(
    gen: &HeatBathGenerator,
    rho0: &DensityMatrix,
    t: f64,
) -> Result<DensityMatrix> {
    gen.check(rho0)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "evolution time {t} must be finite and >= 0"
        )));
    }
    let n = gen.layout.n_sites();
    let stay = (-t).exp();
    let moved = -(-t).exp_m1();
    let d = gen.layout.total_dim();
    let mut out = ComplexMatrix::zeros(d, d);
    for mask in 0..(1u64 << n) {
        let s = Region(mask);
        let weight = stay.powi((n - s.len()) as i32) * moved.powi(s.len() as i32);
        if weight == 0.0 {
            continue;
        }
        out += gen.local_map(rho0.matrix(), s)? * Complex64::new(weight, 0.0);
    }
    DensityMatrix::from_computed(out, gen.layout.clone())
}

/// Matrix exponential of the vectorized generator applied to `ρ0`.
pub fn evolve_superoperator(
    gen: &HeatBathGenerator,
    rho0: &DensityMatrix,
    t: f64,
) -> Result<DensityMatrix> {
    gen.check(rho0)?;
    let d = gen.layout.total_dim();
    let propagator = (gen.superoperator()? * Complex64::new(t, 0.0)).exp();
    let v = ComplexMatrix::from_fn(d * d, 1, |idx, _| rho0.matrix()[(idx % d, idx / d)]);
    let w = propagator * v;
    DensityMatrix::from_computed(
        ComplexMatrix::from_fn(d, d, |i, j| w[(i + j * d, 0)]),
        gen.layout.clone(),
    )
}

/// States and divergences at the requested times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub divergences: Vec<f64>,
}

/// Classic fourth-order Runge–Kutta with step at most `max_step`, re-Hermitizing
/// and renormalizing the trace after every step.
pub fn evolve_ode(
    gen: &HeatBathGenerator,
    rho0: &DensityMatrix,
    t_grid: &[f64],
    max_step: f64,
) -> Result<Trajectory> {
    gen.check(rho0)?;
    if max_step.is_nan() || max_step <= 0.0 {
        return Err(Error::InvalidArgument("step size must be positive".into()));
    }
    if t_grid.first().is_some_and(|&t| t < 0.0) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "time grid must be increasing and nonnegative".into(),
        ));
    }
    let mut times = Vec::with_capacity(t_grid.len());
    let mut states = Vec::with_capacity(t_grid.len());
    let mut divergences = Vec::with_capacity(t_grid.len());
    let mut state = rho0.matrix().clone();
    let mut now = 0.0;
    let half = Complex64::new(0.5, 0.0);
    for &target in t_grid {
        let span = target - now;
        let steps = (span / max_step).ceil().max(0.0) as usize;
        if steps > 0 {
            let h = span / steps as f64;
            let hc = Complex64::new(h, 0.0);
            for _ in 0..steps {
                let k1 = gen.apply(&state)?;
                let k2 = gen.apply(&(&state + &k1 * hc * half))?;
                let k3 = gen.apply(&(&state + &k2 * hc * half))?;
                let k4 = gen.apply(&(&state + &k3 * hc))?;
                state += (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4)
                    * Complex64::new(h / 6.0, 0.0);
                state = hermitize(&state);
                let tr = state.trace().re;
                state /= Complex64::new(tr, 0.0);
                now += h;
            }
            let min = EigenSystem::new(&state)?.min();
            if min < -1e-9 {
                return Err(Error::StepRejected {
                    t: now,
                    reason: format!("eigenvalue {min:e}"),
                });
            }
        }
        now = target;
        let rho = DensityMatrix::from_computed(state.clone(), gen.layout.clone())?;
        divergences.push(rel_entropy(&rho, &gen.sigma)?);
        times.push(target);
        states.push(rho);
    }
    Ok(Trajectory {
        times,
        states,
        divergences,
    })
}

fn log_difference(gen: &HeatBathGenerator, rho: &DensityMatrix) -> Result<ComplexMatrix> {
    let tol = ToleranceConfig::default();
    Ok(rho.eigen().log(&tol)? - &gen.log_sigma)
}

/// `−tr[L*(ρ)(log ρ − log σ)]`.
pub fn entropy_production(gen: &HeatBathGenerator, rho: &DensityMatrix) -> Result<f64> {
    gen.check(rho)?;
    Ok(-trace_product(&gen.apply(rho.matrix())?, &log_difference(gen, rho)?).re)
}

/// Conditional log-Sobolev ratio for one region, with the independent
/// evaluation of `1/2 + D(σ_x ⊗ ρ_{xᶜ}‖ρ) / (2 D_x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LsRatio {
    pub ratio: f64,
    pub decomposition: f64,
    pub conditional_divergence: f64,
}

/// `−tr[L*_x(ρ)(log ρ − log σ)] / (2 D_x(ρ‖σ))` with `L*_x = T_x − 1`.
pub fn conditional_ls_ratio(
    gen: &HeatBathGenerator,
    rho: &DensityMatrix,
    x: Region,
) -> Result<LsRatio> {
    gen.check(rho)?;
    gen.layout.check_region(x)?;
    rho.require_full_rank(&ToleranceConfig::default())?;
    let d = rel_entropy(rho, &gen.sigma)?;
    let dx = d - marginal_rel_entropy(rho, &gen.sigma, gen.layout.complement(x))?;
    if dx <= 1e-12 {
        return Err(Error::DegenerateDenominator(dx));
    }
    let moved = gen.local_map(rho.matrix(), x)?;
    let local = &moved - rho.matrix();
    let numerator = -trace_product(&local, &log_difference(gen, rho)?).re;
    let tau = DensityMatrix::from_computed(moved, gen.layout.clone())?;
    let back = rel_entropy(&tau, rho)?;
    Ok(LsRatio {
        ratio: numerator / (2.0 * dx),
        decomposition: 0.5 + back / (2.0 * dx),
        conditional_divergence: dx,
    })
}

/// `entropy_production / (2 D(ρ‖σ))`, or `None` when `D ≤ 1e−12`.
pub fn ls_ratio(gen: &HeatBathGenerator, rho: &DensityMatrix) -> Result<Option<f64>> {
    gen.check(rho)?;
    let tol = ToleranceConfig::default();
    let e = rho.eigen();
    e.require_positive(&tol)?;
    let log_rho = e.map_real(f64::ln);
    ratio_from_parts(gen, rho.matrix(), &log_rho)
}

fn ratio_from_parts(
    gen: &HeatBathGenerator,
    rho: &ComplexMatrix,
    log_rho: &ComplexMatrix,
) -> Result<Option<f64>> {
    let diff = log_rho - &gen.log_sigma;
    let d = trace_product(rho, &diff).re;
    if d <= 1e-12 {
        return Ok(None);
    }
    let ep = -trace_product(&gen.apply(rho)?, &diff).re;
    Ok(Some(ep / (2.0 * d)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LsMethod {
    Sampling,
    LocalRefinement,
}

/// Upper estimate of the global log-Sobolev constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LSEstimate {
    /// Smallest ratio over every evaluated state.
    pub value: f64,
    /// Trial seed of the sampled state with the smallest ratio.
    pub argmin_seed: Seed,
    pub trials: usize,
    /// Which stage produced `value`.
    pub method: LsMethod,
    /// Smallest ratio among the raw samples.
    pub sampled_min: f64,
}

/// Sampled state `i` of the estimation ensemble: alternately a Ginibre mixed
/// state and a lightly depolarized pure state.
pub fn ls_sample(layout: &HilbertLayout, seed: Seed, index: u64) -> Result<DensityMatrix> {
    if index.is_multiple_of(2) {
        random_mixed(layout, seed, &ToleranceConfig::default())
    } else {
        let weight = 0.01 + 0.3 * (splitmix_unit(seed.0));
        depolarize(&random_pure(layout, seed), weight)
    }
}

fn splitmix_unit(x: u64) -> f64 {
    (crate::states::splitmix64(x) >> 11) as f64 / (1u64 << 53) as f64
}

/// Minimum of the ratio over `trials` sampled states, refined by coordinate
/// descent from the three worst samples.
pub fn estimate_global_ls(
    gen: &HeatBathGenerator,
    trials: usize,
    seed: Seed,
) -> Result<LSEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument(
            "at least one trial is needed".into(),
        ));
    }
    let mut samples: Vec<(f64, Seed, DensityMatrix)> = Vec::new();
    for i in 0..trials as u64 {
        let s = seed.for_trial(i);
        let rho = ls_sample(&gen.layout, s, i)?;
        if let Some(r) = ls_ratio(gen, &rho)? {
            samples.push((r, s, rho));
        }
    }
    if samples.is_empty() {
        return Err(Error::DegenerateDenominator(0.0));
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (sampled_min, argmin_seed) = (samples[0].0, samples[0].1);
    let mut value = sampled_min;
    let mut method = LsMethod::Sampling;
    for (_, _, rho) in samples.iter().take(3) {
        let refined = refine(gen, rho)?;
        if refined < value {
            value = refined;
            method = LsMethod::LocalRefinement;
        }
    }
    Ok(LSEstimate {
        value,
        argmin_seed,
        trials,
        method,
        sampled_min,
    })
}

/// State `V0 G(θ) diag(softmax λ) G(θ)† V0†` with `G` a product of complex
/// Givens rotations.
struct Parameterized {
    base: ComplexMatrix,
    pairs: Vec<(usize, usize)>,
}

impl Parameterized {
    fn n_params(&self) -> usize {
        self.base.nrows() + 2 * self.pairs.len()
    }

    fn build(&self, params: &[f64]) -> (ComplexMatrix, ComplexMatrix) {
        let d = self.base.nrows();
        let logits = &params[..d];
        let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logits.iter().map(|l| (l - top).exp()).sum();
        let log_p: Vec<f64> = logits.iter().map(|l| l - top - z.ln()).collect();
        let mut v = self.base.clone();
        for (k, &(i, j)) in self.pairs.iter().enumerate() {
            let theta = params[d + 2 * k];
            let phase = Complex64::from_polar(1.0, params[d + 2 * k + 1]);
            let (c, s) = (theta.cos(), theta.sin());
            for row in 0..d {
                let vi = v[(row, i)];
                let vj = v[(row, j)];
                v[(row, i)] = vi * c - vj * phase.conj() * s;
                v[(row, j)] = vi * phase * s + vj * c;
            }
        }
        let with = |f: &dyn Fn(f64) -> f64| {
            let mut scaled = v.clone();
            for (j, mut col) in scaled.column_iter_mut().enumerate() {
                col *= Complex64::new(f(log_p[j]), 0.0);
            }
            &scaled * v.adjoint()
        };
        (with(&f64::exp), with(&|x| x))
    }
}

fn refine(gen: &HeatBathGenerator, start: &DensityMatrix) -> Result<f64> {
    let e = start.eigen();
    let d = e.values.len();
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| (i + 1..d).map(move |j| (i, j)))
        .collect();
    let model = Parameterized {
        base: e.vectors.clone(),
        pairs,
    };
    let mut params = vec![0.0; model.n_params()];
    for (k, v) in e.values.iter().enumerate() {
        params[k] = v.max(1e-300).ln();
    }
    let eval = |p: &[f64]| -> Result<f64> {
        let (rho, log_rho) = model.build(p);
        // The smallest eigenvalue is kept away from zero so logs stay finite.
        if p[..d].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - p[..d].iter().cloned().fold(f64::INFINITY, f64::min)
            > 30.0
        {
            return Ok(f64::INFINITY);
        }
        Ok(ratio_from_parts(gen, &rho, &log_rho)?.unwrap_or(f64::INFINITY))
    };
    let mut best = eval(&params)?;
    let mut step = 0.2;
    for _sweep in 0..40 {
        let mut improved = false;
        for k in 0..params.len() {
            for dir in [1.0, -1.0] {
                let mut trial = params.clone();
                trial[k] += dir * step;
                let v = eval(&trial)?;
                if v < best {
                    best = v;
                    params = trial;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-4 {
                break;
            }
        }
    }
    Ok(best)
}

/// One row of [`mixing_diagnostics`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub t: f64,
    pub divergence: f64,
    /// `D(ρ0‖σ) e^{−2αt}`.
    pub divergence_bound: f64,
    pub trace_distance: f64,
    /// `√(2 D(ρ_t‖σ))`.
    pub pinsker_bound: f64,
    /// `√(2 ln(1/σ_min)) e^{−αt}`.
    pub global_bound: f64,
}

impl DiagnosticRow {
    /// Smallest slack of the three bounds over their measured columns.
    pub fn margin(&self) -> f64 {
        (self.divergence_bound - self.divergence)
            .min(self.pinsker_bound - self.trace_distance)
            .min(self.global_bound - self.trace_distance)
    }
}

pub fn mixing_diagnostics(
    gen: &HeatBathGenerator,
    rho0: &DensityMatrix,
    alpha: f64,
    t_grid: &[f64],
) -> Result<Vec<DiagnosticRow>> {
    gen.check(rho0)?;
    let d0 = rel_entropy(rho0, &gen.sigma)?;
    let global = (2.0 * (1.0 / gen.sigma_min()).ln()).sqrt();
    t_grid
        .iter()
        .map(|&t| {
            let rho_t = evolve_closed_form(gen, rho0, t)?;
            let divergence = rel_entropy(&rho_t, &gen.sigma)?;
            Ok(DiagnosticRow {
                t,
                divergence,
                divergence_bound: d0 * (-2.0 * alpha * t).exp(),
                trace_distance: trace_norm(&(rho_t.matrix() - gen.sigma.matrix())),
                pinsker_bound: (2.0 * divergence.max(0.0)).sqrt(),
                global_bound: global * (-alpha * t).exp(),
            })
        })
        .collect()
}
