use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qfactor::campaign::{run_campaign, CampaignConfig, CampaignReport, Command};
use qfactor::tensor::MAX_TOTAL_DIM;

/// Environment variable naming the directory for reports when `--output` is absent.
const OUT_DIR_ENV: &str = "QFACTOR_OUT_DIR";

const AFTER_HELP: &str = "\
Report columns (CSV header, one row per trial):
  trial         trial index, 0-based
  seed          per-trial seed; rebuilds the instance exactly
  lhs, rhs      the two sides of the checked inequality
  error_factor  multiplier on the global divergence (<= 0 marks a vacuous bound)
  margin        rhs - lhs, negative means violated
  status        pass | fail | vacuous | skipped
Lines starting with '#' are comments: a timestamp and config header, then a
summary block (counts, min margin, worst seed, command-specific extras).
JSON output mirrors the rows under \"rows\" next to \"summary\".

Seeds: trial i uses splitmix64(root ^ splitmix64(i)) with root = --seed.
Independent draws inside a trial use substream k =
splitmix64(trial_seed + 0xD1B54A32D192ED03 * (k + 1)) (wrapping arithmetic).

evolve also writes a decay table (trial,t,divergence,bound,trace_distance,
pinsker_bound,global_bound) to <output stem>.decay.csv, or after the report on stdout.

Reports go to --output, else to $QFACTOR_OUT_DIR/<command>.<csv|json>, else stdout.
Exit codes: 0 no failing rows, 1 failing rows or runtime error, 2 usage error,
3 output not writable.";

#[derive(Parser, Debug)]
#[command(
    name = "qfactor",
    version,
    about = "Randomized verification campaigns for quasi-factorization and heat-bath mixing bounds"
)]
#[command(arg_required_else_help = true, after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Product reference state: D(rho||sigma) <= sum over sites of conditional divergences.
    QfProduct(CommonArgs),
    /// Overlapping regions AB, BC with a correlated reference state.
    QfOverlap(CommonArgs),
    /// Bound through conditional expectations, with its intermediate chain.
    QfExpectation(CommonArgs),
    /// Compare conditional mutual information with the Petz-form divergence on near-pure states.
    CompareCre(CommonArgs),
    /// Heat-bath evolution and exponential decay of relative entropy.
    Evolve(CommonArgs),
    /// Sample the conditional and global log-Sobolev ratios.
    LsEstimate(CommonArgs),
    /// Check the quadrature against known integrals of the kernel.
    QuadSelftest(CommonArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Comma-separated local dimensions, product at most 64.
    #[arg(long, value_delimiter = ',', default_value = "2,2,2")]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Depolarizing weight mixed into near-pure samples.
    #[arg(long, default_value_t = 1e-6)]
    eps_depolarize: f64,
    /// A row fails only when margin < -tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Final time for evolve.
    #[arg(long, default_value_t = 5.0)]
    t_max: f64,
    /// Number of time steps for evolve.
    #[arg(long, default_value_t = 200)]
    steps: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

fn split(sub: Sub) -> (Command, CommonArgs) {
    match sub {
        Sub::QfProduct(a) => (Command::QfProduct, a),
        Sub::QfOverlap(a) => (Command::QfOverlap, a),
        Sub::QfExpectation(a) => (Command::QfExpectation, a),
        Sub::CompareCre(a) => (Command::CompareCre, a),
        Sub::Evolve(a) => (Command::Evolve, a),
        Sub::LsEstimate(a) => (Command::LsEstimate, a),
        Sub::QuadSelftest(a) => (Command::QuadSelftest, a),
    }
}

fn build_config(command: Command, args: &CommonArgs) -> Result<CampaignConfig, String> {
    let total = args
        .dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d));
    match total {
        Some(t) if t <= MAX_TOTAL_DIM => {}
        _ => {
            return Err(format!(
                "--dims product exceeds the ceiling of {MAX_TOTAL_DIM}"
            ))
        }
    }
    let cfg = CampaignConfig {
        command,
        dims: args.dims.clone(),
        trials: args.trials,
        seed: args.seed,
        eps_depolarize: args.eps_depolarize,
        tolerance: args.tolerance,
        t_max: args.t_max,
        steps: args.steps,
    };
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn header(cfg: &CampaignConfig) -> String {
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let dims: Vec<String> = cfg.dims.iter().map(|d| d.to_string()).collect();
    format!(
        "# generated unix_time={stamp}\n# command={} dims={} trials={} seed={} eps_depolarize={:?} tolerance={:?} t_max={:?} steps={}\n",
        cfg.command,
        dims.join(","),
        cfg.trials,
        cfg.seed,
        cfg.eps_depolarize,
        cfg.tolerance,
        cfg.t_max,
        cfg.steps
    )
}

fn write_csv_rows<W: Write, T: serde::Serialize>(out: W, rows: &[T]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(io::Error::other)?;
    }
    w.flush()
}

fn opt<T: std::fmt::Debug>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{x:?}"))
}

fn write_csv_report<W: Write>(
    mut out: W,
    cfg: &CampaignConfig,
    report: &CampaignReport,
) -> io::Result<()> {
    out.write_all(header(cfg).as_bytes())?;
    write_csv_rows(&mut out, &report.rows)?;
    let s = &report.summary;
    writeln!(
        out,
        "# summary pass={} fail={} vacuous={} skipped={} min_margin={} worst_seed={}",
        s.pass,
        s.fail,
        s.vacuous,
        s.skipped,
        opt(s.min_margin),
        opt(s.worst_seed)
    )?;
    for (k, v) in &s.extra {
        writeln!(out, "# {k}={v:?}")?;
    }
    out.flush()
}

fn write_json_report<W: Write>(mut out: W, report: &CampaignReport) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, report).map_err(io::Error::other)?;
    writeln!(out)?;
    out.flush()
}

fn decay_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    path.with_file_name(format!("{stem}.decay.csv"))
}

fn output_path(cfg: &CampaignConfig, args: &CommonArgs) -> Option<PathBuf> {
    if let Some(p) = &args.output {
        return Some(p.clone());
    }
    std::env::var_os(OUT_DIR_ENV)
        .filter(|d| !d.is_empty())
        .map(|d| PathBuf::from(d).join(format!("{}.{}", cfg.command, args.format.extension())))
}

fn emit(cfg: &CampaignConfig, args: &CommonArgs, report: &CampaignReport) -> io::Result<()> {
    let write_body = |out: &mut dyn Write| -> io::Result<()> {
        match args.format {
            Format::Csv => write_csv_report(out, cfg, report),
            Format::Json => write_json_report(out, report),
        }
    };
    match output_path(cfg, args) {
        Some(path) => {
            let mut file = BufWriter::new(File::create(&path)?);
            write_body(&mut file)?;
            if cfg.command == Command::Evolve {
                let mut decay = BufWriter::new(File::create(decay_path(&path))?);
                decay.write_all(header(cfg).as_bytes())?;
                write_csv_rows(&mut decay, &report.decay)?;
            }
            Ok(())
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_body(&mut lock)?;
            if cfg.command == Command::Evolve && args.format == Format::Csv {
                writeln!(lock, "# decay")?;
                write_csv_rows(&mut lock, &report.decay)?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (command, args) = split(cli.command);
    let cfg = match build_config(command, &args) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let report = match run_campaign(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = emit(&cfg, &args, &report) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(3);
    }
    let s = &report.summary;
    eprintln!(
        "{}: pass={} fail={} vacuous={} skipped={} min_margin={}",
        cfg.command,
        s.pass,
        s.fail,
        s.vacuous,
        s.skipped,
        opt(s.min_margin)
    );
    if report.has_failures() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
