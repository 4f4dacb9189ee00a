//! Randomized verification campaigns.
//!
//! Trial `i` of a campaign with root seed `s` draws everything from
//! `Seed(s).for_trial(i)` and its sub-streams, so a row's `seed` column is
//! enough to rebuild the instance with [`instance`]. Trials run on the rayon
//! pool; rows are always returned in trial order.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::ToleranceConfig;
use crate::entropy::{compare_definitions, Ordering, Tripartition};
use crate::error::{Error, Result};
use crate::heatbath::{
    estimate_global_ls, ls_ratio, ls_sample, mixing_diagnostics, HeatBathGenerator,
};
use crate::quadrature::{beta0, QuadratureScheme, MAX_TAIL};
use crate::quasi::{verify_expectation_qf, verify_overlap_qf, verify_product_qf};
use crate::states::{
    depolarize, random_mixed, random_product, random_pure, splitmix64, DensityMatrix, Seed,
};
use crate::tensor::{ComplexMatrix, HilbertLayout, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    QfProduct,
    QfOverlap,
    QfExpectation,
    CompareCre,
    Evolve,
    LsEstimate,
    QuadSelftest,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::QfProduct,
        Command::QfOverlap,
        Command::QfExpectation,
        Command::CompareCre,
        Command::Evolve,
        Command::LsEstimate,
        Command::QuadSelftest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::QfProduct => "qf-product",
            Command::QfOverlap => "qf-overlap",
            Command::QfExpectation => "qf-expectation",
            Command::CompareCre => "compare-cre",
            Command::Evolve => "evolve",
            Command::LsEstimate => "ls-estimate",
            Command::QuadSelftest => "quad-selftest",
        }
    }
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Vacuous,
    Skipped,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Vacuous => "vacuous",
            Status::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub command: Command,
    pub dims: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub eps_depolarize: f64,
    pub tolerance: f64,
    /// Final time of `evolve`.
    pub t_max: f64,
    /// Number of time steps of the `evolve` grid.
    pub steps: usize,
}

impl CampaignConfig {
    pub fn new(command: Command, dims: Vec<usize>) -> Self {
        Self {
            command,
            dims,
            trials: 100,
            seed: 42,
            eps_depolarize: 1e-6,
            tolerance: 1e-8,
            t_max: 5.0,
            steps: 200,
        }
    }

    pub fn layout(&self) -> Result<HilbertLayout> {
        HilbertLayout::new(self.dims.clone())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("--trials must be at least 1".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidArgument(
                "--tolerance must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.eps_depolarize) {
            return Err(Error::InvalidArgument(
                "--eps-depolarize must lie in [0, 1]".into(),
            ));
        }
        let layout = self.layout()?;
        let n = layout.n_sites();
        let min_sites = match self.command {
            Command::QfProduct | Command::Evolve | Command::LsEstimate | Command::QuadSelftest => 1,
            Command::QfOverlap | Command::QfExpectation => 2,
            Command::CompareCre => 3,
        };
        if n < min_sites {
            return Err(Error::InvalidArgument(format!(
                "{} needs at least {min_sites} sites",
                self.command
            )));
        }
        if self.command == Command::Evolve
            && !(self.t_max > 0.0 && self.t_max.is_finite() && self.steps >= 1)
        {
            return Err(Error::InvalidArgument(
                "evolve needs --t-max > 0 and --steps >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub trial: u64,
    pub seed: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub error_factor: f64,
    pub margin: f64,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub trial: u64,
    pub t: f64,
    pub divergence: f64,
    pub bound: f64,
    pub trace_distance: f64,
    pub pinsker_bound: f64,
    pub global_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub vacuous: usize,
    pub skipped: usize,
    /// Smallest margin among pass and fail rows.
    pub min_margin: Option<f64>,
    pub worst_seed: Option<u64>,
    /// Command-specific figures (ordering counts, LS estimate, ...).
    pub extra: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub rows: Vec<ReportRow>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub decay: Vec<DecayRow>,
}

impl CampaignReport {
    pub fn has_failures(&self) -> bool {
        self.summary.fail > 0
    }
}

fn status_for(margin: f64, tolerance: f64) -> Status {
    if margin >= -tolerance {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn unit(seed: Seed) -> f64 {
    (splitmix64(seed.0) >> 11) as f64 / (1u64 << 53) as f64
}

/// Reference state `(1 − λ) ⊗_x σ_x + λ τ` with random product part, Ginibre
/// `τ` and `λ` uniform in `[0, 1]`, so that both weakly and strongly
/// correlated references are drawn.
pub fn correlated_reference(layout: &HilbertLayout, seed: Seed) -> Result<DensityMatrix> {
    let tol = ToleranceConfig::default();
    let (product, _) = random_product(layout, seed.substream(0), &tol)?;
    let tau = random_mixed(layout, seed.substream(1), &tol)?;
    let lambda = unit(seed.substream(2));
    let m: ComplexMatrix = product.matrix() * num_complex::Complex64::new(1.0 - lambda, 0.0)
        + tau.matrix() * num_complex::Complex64::new(lambda, 0.0);
    DensityMatrix::from_computed(m, layout.clone())
}

/// The random objects behind one trial.
#[derive(Debug, Clone)]
pub struct Instance {
    pub rho: DensityMatrix,
    pub sigma: DensityMatrix,
    pub sigma_factors: Vec<DensityMatrix>,
}

/// Rebuilds the state pair of a trial from its seed (as printed in reports).
pub fn instance(
    command: Command,
    layout: &HilbertLayout,
    trial_seed: Seed,
    eps: f64,
) -> Result<Instance> {
    let tol = ToleranceConfig::default();
    let (sigma_product, sigma_factors) = random_product(layout, trial_seed.substream(1), &tol)?;
    let (rho, sigma) = match command {
        Command::QfProduct | Command::Evolve => (
            random_mixed(layout, trial_seed.substream(0), &tol)?,
            sigma_product,
        ),
        Command::QfOverlap | Command::QfExpectation => (
            random_mixed(layout, trial_seed.substream(0), &tol)?,
            correlated_reference(layout, trial_seed.substream(2))?,
        ),
        Command::CompareCre => (
            depolarize(&random_pure(layout, trial_seed.substream(0)), eps)?,
            sigma_product,
        ),
        Command::LsEstimate | Command::QuadSelftest => (
            ls_sample(layout, trial_seed.substream(0), 0)?,
            sigma_product,
        ),
    };
    Ok(Instance {
        rho,
        sigma,
        sigma_factors,
    })
}

/// `A` = first site, `C` = last site, `B` = everything in between.
pub fn default_tripartition(layout: &HilbertLayout) -> Tripartition {
    let n = layout.n_sites();
    let a = Region::site(0);
    let c = Region::site(n - 1);
    Tripartition {
        a,
        b: layout.full_region().difference(a).difference(c),
        c,
    }
}

struct TrialOutcome {
    row: ReportRow,
    ordering: Option<Ordering>,
    decay: Vec<DecayRow>,
}

fn row(
    trial: u64,
    seed: Seed,
    lhs: f64,
    rhs: f64,
    error_factor: f64,
    margin: f64,
    status: Status,
) -> ReportRow {
    ReportRow {
        trial,
        seed: seed.0,
        lhs,
        rhs,
        error_factor,
        margin,
        status,
    }
}

fn run_trial(cfg: &CampaignConfig, layout: &HilbertLayout, trial: u64) -> Result<TrialOutcome> {
    let seed = Seed(cfg.seed).for_trial(trial);
    let tol = cfg.tolerance;
    let inst = instance(cfg.command, layout, seed, cfg.eps_depolarize)?;
    let mut ordering = None;
    let mut decay = Vec::new();
    let row = match cfg.command {
        Command::QfProduct => {
            let r = verify_product_qf(&inst.rho, &inst.sigma_factors)?;
            row(
                trial,
                seed,
                r.lhs,
                r.rhs,
                r.error_factor,
                r.margin,
                status_for(r.margin, tol),
            )
        }
        Command::QfOverlap => {
            let n = layout.n_sites();
            let ab = layout.full_region().difference(Region::site(n - 1));
            let bc = layout.full_region().difference(Region::site(0));
            let r = verify_overlap_qf(&inst.rho, &inst.sigma, ab, bc)?;
            let status = if r.nontrivial {
                status_for(r.margin, tol)
            } else {
                Status::Vacuous
            };
            row(trial, seed, r.lhs, r.rhs, r.error_factor, r.margin, status)
        }
        Command::QfExpectation => {
            let r = verify_expectation_qf(
                &inst.rho,
                &inst.sigma,
                Region::site(0),
                &QuadratureScheme::default(),
            )?;
            let chain = r.split_margin.min(r.deviation_margin).min(r.lieb_margin);
            let margin = if r.result.nontrivial {
                chain.min(r.result.margin)
            } else {
                chain
            };
            let status = if margin < -tol {
                Status::Fail
            } else if r.result.nontrivial {
                Status::Pass
            } else {
                Status::Vacuous
            };
            row(
                trial,
                seed,
                r.result.lhs,
                r.result.rhs,
                r.result.error_factor,
                margin,
                status,
            )
        }
        Command::CompareCre => {
            let c = compare_definitions(&inst.rho, default_tripartition(layout), 1e-12)?;
            ordering = Some(c.ordering);
            let status = if c.finite {
                Status::Pass
            } else {
                Status::Skipped
            };
            row(
                trial,
                seed,
                c.cmi,
                c.petz_divergence,
                1.0,
                c.difference(),
                status,
            )
        }
        Command::Evolve => {
            let gen = HeatBathGenerator::new(inst.sigma_factors.clone())?;
            let grid: Vec<f64> = (0..=cfg.steps)
                .map(|k| cfg.t_max * k as f64 / cfg.steps as f64)
                .collect();
            let table = mixing_diagnostics(&gen, &inst.rho, 0.5, &grid)?;
            let margin = table
                .iter()
                .map(|r| r.margin())
                .fold(f64::INFINITY, f64::min);
            let last = table.last().expect("grid is non-empty");
            decay = table
                .iter()
                .map(|r| DecayRow {
                    trial,
                    t: r.t,
                    divergence: r.divergence,
                    bound: r.divergence_bound,
                    trace_distance: r.trace_distance,
                    pinsker_bound: r.pinsker_bound,
                    global_bound: r.global_bound,
                })
                .collect();
            row(
                trial,
                seed,
                last.divergence,
                last.divergence_bound,
                1.0,
                margin,
                status_for(margin, tol),
            )
        }
        Command::LsEstimate => {
            let gen = ls_generator(cfg, layout)?;
            let rho = ls_sample(layout, seed, trial)?;
            match ls_ratio(&gen, &rho)? {
                Some(ratio) => row(
                    trial,
                    seed,
                    ratio,
                    0.5,
                    1.0,
                    ratio - 0.5,
                    status_for(ratio - 0.5, tol),
                ),
                None => row(trial, seed, f64::NAN, 0.5, 1.0, f64::NAN, Status::Skipped),
            }
        }
        Command::QuadSelftest => unreachable!("handled without trials"),
    };
    Ok(TrialOutcome {
        row,
        ordering,
        decay,
    })
}

fn ls_generator(cfg: &CampaignConfig, layout: &HilbertLayout) -> Result<HeatBathGenerator> {
    let (_, factors) = random_product(
        layout,
        Seed(cfg.seed).substream(u64::MAX - 1),
        &ToleranceConfig::default(),
    )?;
    HeatBathGenerator::new(factors)
}

fn quad_selftest(cfg: &CampaignConfig) -> Vec<ReportRow> {
    let q = QuadratureScheme::default();
    let mass = q.integrate(beta0);
    let check = |trial: u64, lhs: f64, rhs: f64, bound: f64| {
        let margin = bound - (lhs - rhs).abs();
        row(
            trial,
            Seed(cfg.seed),
            lhs,
            rhs,
            1.0,
            margin,
            if margin >= 0.0 {
                Status::Pass
            } else {
                Status::Fail
            },
        )
    };
    let omega = 2.0_f64;
    vec![
        check(0, mass, 1.0, 1e-10),
        check(
            1,
            q.integrate_beta0(|t| (omega * t).cos()),
            omega / omega.sinh(),
            1e-10,
        ),
        check(2, q.tail_mass(), 0.0, MAX_TAIL),
    ]
}

fn summarize(rows: &[ReportRow]) -> Summary {
    let count = |s: Status| rows.iter().filter(|r| r.status == s).count();
    let mut min_margin: Option<f64> = None;
    let mut worst_seed = None;
    for r in rows
        .iter()
        .filter(|r| matches!(r.status, Status::Pass | Status::Fail))
    {
        if min_margin.is_none_or(|m| r.margin < m) {
            min_margin = Some(r.margin);
            worst_seed = Some(r.seed);
        }
    }
    Summary {
        pass: count(Status::Pass),
        fail: count(Status::Fail),
        vacuous: count(Status::Vacuous),
        skipped: count(Status::Skipped),
        min_margin,
        worst_seed,
        extra: BTreeMap::new(),
    }
}

/// Runs every trial of a campaign.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignReport> {
    cfg.validate()?;
    let layout = cfg.layout()?;
    if cfg.command == Command::QuadSelftest {
        let rows = quad_selftest(cfg);
        let summary = summarize(&rows);
        return Ok(CampaignReport {
            rows,
            summary,
            decay: Vec::new(),
        });
    }
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| run_trial(cfg, &layout, i))
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<ReportRow> = outcomes.iter().map(|o| o.row).collect();
    let mut extra = BTreeMap::new();
    match cfg.command {
        Command::CompareCre => {
            let count =
                |o: Ordering| outcomes.iter().filter(|t| t.ordering == Some(o)).count() as f64;
            extra.insert("cmi_larger".to_string(), count(Ordering::CmiLarger));
            extra.insert("petz_larger".to_string(), count(Ordering::PetzLarger));
            extra.insert("equal".to_string(), count(Ordering::Equal));
            extra.insert("eps_depolarize".to_string(), cfg.eps_depolarize);
        }
        Command::QfOverlap | Command::QfExpectation => {
            let vacuous = rows.iter().filter(|r| r.status == Status::Vacuous).count();
            extra.insert(
                "vacuous_fraction".to_string(),
                vacuous as f64 / rows.len() as f64,
            );
        }
        Command::LsEstimate => {
            let gen = ls_generator(cfg, &layout)?;
            let est = estimate_global_ls(&gen, cfg.trials, Seed(cfg.seed))?;
            let margin = est.value - 0.5;
            rows.push(row(
                cfg.trials as u64,
                est.argmin_seed,
                est.value,
                0.5,
                1.0,
                margin,
                status_for(margin, cfg.tolerance),
            ));
            extra.insert("estimate".to_string(), est.value);
            extra.insert("sampled_min".to_string(), est.sampled_min);
        }
        _ => {}
    }
    let mut summary = summarize(&rows);
    summary.extra = extra;
    let decay = outcomes.into_iter().flat_map(|o| o.decay).collect();
    Ok(CampaignReport {
        rows,
        summary,
        decay,
    })
}
