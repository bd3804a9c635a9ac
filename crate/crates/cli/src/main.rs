//! `linnik` command-line tool.
//!
//! Data (draws, JSON reports, CSV tables) goes to files or stdout; progress
//! and summaries go to stderr.

mod input;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use linnik::asymptotics::{asymptotic_ci, IntervalEstimate};
use linnik::bootstrap::{bootstrap_ci, BootstrapConfig};
use linnik::data::{
    histogram, kde_boundary_corrected, kde_gaussian, linspace, load_ohlc_csv, negative_abs_returns,
    write_xy_csv, PriceColumn, ReturnSeries, DEFAULT_BANDWIDTH, DEFAULT_BINS,
};
use linnik::estimators::{Family, FitResult, Fitter};
use linnik::montecarlo::{run_study, write_csv, StudyConfig};
use linnik::sampling::{sample_gl, sample_gml, GlParams, GmlParams, RngStream};

/// Stream used for simulated overlays, clear of the bootstrap streams.
const SIMULATION_STREAM: u64 = 1 << 48;

#[derive(Parser)]
#[command(
    name = "linnik",
    version,
    about = "Generalized Mittag-Leffler and Linnik distributions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random sample.
    Sample(SampleArgs),
    /// Method-of-log-moments fit of a data file.
    Fit(FitArgs),
    /// Confidence intervals for a fit.
    Ci(CiArgs),
    /// Bias / coefficient-of-variation simulation study.
    McStudy(StudyArgs),
    /// Fit and bootstrap a daily price file, with plot-ready density exports.
    Analyze(AnalyzeArgs),
    /// Kernel density estimate of a data file.
    Kde(KdeArgs),
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct FitInput {
    #[arg(long)]
    family: Family,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(2..=3))]
    nparams: u8,
    /// Whitespace- or comma-separated numbers; `#` starts a comment.
    #[arg(long)]
    input: PathBuf,
    /// Fit |x| instead of x.
    #[arg(long)]
    take_abs: bool,
    /// Extra starting points for the three-parameter search.
    #[arg(long, default_value_t = 0)]
    multistart: usize,
}

impl FitInput {
    fn fitter(&self) -> Result<Fitter> {
        Ok(Fitter::new(self.family, self.nparams)?.with_multistart(self.multistart))
    }

    fn load(&self) -> Result<Vec<f64>> {
        let mut x = input::read_numbers(&self.input)?;
        if self.take_abs {
            x.iter_mut().for_each(|v| *v = v.abs());
        }
        Ok(x)
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    fit: FitInput,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Asymptotic,
    Bootstrap,
}

#[derive(Args)]
struct CiArgs {
    #[command(flatten)]
    fit: FitInput,
    #[arg(long, value_enum, default_value_t = Method::Bootstrap)]
    method: Method,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Bootstrap replicates.
    #[arg(long = "replicates", short = 'B', default_value_t = 1000)]
    replicates: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    GmlDesign,
    GlDesign,
}

#[derive(Args)]
struct StudyArgs {
    /// TOML study configuration.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Override the number of replications.
    #[arg(long)]
    replications: Option<usize>,
    /// Override the sample sizes.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// Override the seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Side {
    /// Magnitudes of the negative returns.
    NegativeAbs,
    /// All returns.
    Full,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Daily OHLC CSV file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    family: Family,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(2..=3))]
    nparams: u8,
    #[arg(long, default_value = "adj_close")]
    column: PriceColumn,
    #[arg(long, value_enum, default_value_t = Side::NegativeAbs)]
    side: Side,
    /// Bootstrap replicates (0 skips the bootstrap).
    #[arg(long = "replicates", short = 'B', default_value_t = 1000)]
    replicates: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    multistart: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_BANDWIDTH)]
    bandwidth: f64,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    #[arg(long, default_value_t = 512)]
    grid_points: usize,
    /// Prefix for `<prefix>_fit.json`, `<prefix>_hist.csv` and `<prefix>_kde.csv`.
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Args)]
struct KdeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BANDWIDTH)]
    bandwidth: f64,
    /// Reflect about zero (for data on [0, ∞)).
    #[arg(long)]
    reflect: bool,
    #[arg(long)]
    grid_min: Option<f64>,
    #[arg(long)]
    grid_max: Option<f64>,
    #[arg(long, default_value_t = 512)]
    grid_points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Sample(a) => cmd_sample(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Ci(a) => cmd_ci(a),
        Command::McStudy(a) => cmd_mc_study(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Kde(a) => cmd_kde(a),
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    let seed = seed.unwrap_or_else(input::fresh_seed);
    eprintln!("seed: {seed}");
    seed
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn draw(
    family: Family,
    alpha: f64,
    delta: f64,
    mu: f64,
    n: usize,
    rng: &mut RngStream,
) -> Result<Vec<f64>> {
    Ok(match family {
        Family::Gml => sample_gml(&GmlParams::new(alpha, delta, mu)?, n, rng),
        Family::Gl => sample_gl(&GlParams::new(alpha, delta, mu)?, n, rng),
    })
}

fn cmd_sample(a: SampleArgs) -> Result<()> {
    let seed = resolve_seed(a.seed);
    let x = draw(
        a.family,
        a.alpha,
        a.delta,
        a.mu,
        a.n,
        &mut RngStream::new(seed, 0),
    )?;
    let mut out = output(a.out.as_deref())?;
    for v in &x {
        writeln!(out, "{v}")?;
    }
    out.flush()?;
    eprintln!("{}", input::Summary::of(&x));
    Ok(())
}

#[derive(Serialize)]
struct FitReport {
    #[serde(flatten)]
    fit: FitResult,
    warnings: Vec<String>,
}

impl FitReport {
    fn new(fit: FitResult) -> Self {
        let mut warnings = Vec::new();
        let amax = fit.family.alpha_max();
        if fit.alpha > amax {
            warnings.push(format!(
                "alpha estimate {:.4} exceeds {amax}: the {} model does not fit these data",
                fit.alpha, fit.family
            ));
        }
        if !fit.converged {
            warnings.push("simplex search did not converge".into());
        }
        if fit.at_boundary {
            warnings.push("search ended on the parameter box boundary".into());
        }
        for w in &warnings {
            eprintln!("warning: {w}");
        }
        Self { fit, warnings }
    }
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let x = a.fit.load()?;
    let fit = a.fit.fitter()?.fit(&x)?;
    print_json(&FitReport::new(fit))
}

#[derive(Serialize)]
struct Intervals {
    alpha: IntervalEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<IntervalEstimate>,
    mu: IntervalEstimate,
}

#[derive(Serialize)]
struct BootstrapInfo {
    seed: u64,
    replicates: usize,
    failures: usize,
    degenerate: Vec<String>,
    point_outside: Vec<String>,
}

#[derive(Serialize)]
struct CiReport {
    fit: FitReport,
    level: f64,
    /// Absent when the bootstrap was skipped.
    intervals: Option<Intervals>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap: Option<BootstrapInfo>,
}

fn run_bootstrap(
    x: &[f64],
    fitter: &Fitter,
    level: f64,
    replicates: usize,
    seed: u64,
) -> Result<CiReport> {
    let cfg = BootstrapConfig {
        replicates,
        level,
        seed,
    };
    let r = bootstrap_ci(x, fitter, &cfg)?;
    if r.failures > 0 {
        eprintln!(
            "{} of {} bootstrap replicates failed",
            r.failures, r.replicates
        );
    }
    Ok(CiReport {
        fit: FitReport::new(r.point),
        level,
        intervals: Some(Intervals {
            alpha: r.alpha,
            delta: Some(r.delta),
            mu: r.mu,
        }),
        bootstrap: Some(BootstrapInfo {
            seed,
            replicates: r.replicates,
            failures: r.failures,
            degenerate: r.degenerate,
            point_outside: r.point_outside,
        }),
    })
}

fn cmd_ci(a: CiArgs) -> Result<()> {
    let x = a.fit.load()?;
    let fitter = a.fit.fitter()?;
    let report = match a.method {
        Method::Asymptotic => {
            if a.fit.nparams != 2 {
                bail!("asymptotic intervals need --nparams 2; use --method bootstrap for three-parameter fits");
            }
            let fit = fitter.fit(&x)?;
            let iv = asymptotic_ci(&fit, fit.n, a.level)?;
            CiReport {
                fit: FitReport::new(fit),
                level: a.level,
                intervals: Some(Intervals {
                    alpha: iv.alpha,
                    delta: None,
                    mu: iv.mu,
                }),
                bootstrap: None,
            }
        }
        Method::Bootstrap => {
            run_bootstrap(&x, &fitter, a.level, a.replicates, resolve_seed(a.seed))?
        }
    };
    print_json(&report)
}

fn cmd_mc_study(a: StudyArgs) -> Result<()> {
    let mut cfg = match (&a.config, a.preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            toml::from_str::<StudyConfig>(&text)
                .with_context(|| format!("invalid study config {}", path.display()))?
        }
        (None, Some(Preset::GmlDesign)) => StudyConfig::gml_design(),
        (None, Some(Preset::GlDesign)) => StudyConfig::gl_design(),
        (None, None) => bail!("either --config or --preset is required"),
    };
    if let Some(r) = a.replications {
        cfg.replications = r;
    }
    if let Some(s) = a.sizes {
        cfg.sample_sizes = s;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    eprintln!(
        "{} study: {} grid points x {:?} x {} replications, seed {}",
        cfg.family,
        cfg.grid.len(),
        cfg.sample_sizes,
        cfg.replications,
        cfg.seed
    );
    let rows = run_study(&cfg)?;
    let mut out = output(a.out.as_deref())?;
    write_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeReport {
    input: String,
    column: PriceColumn,
    side: &'static str,
    records: usize,
    dropped_rows: usize,
    observations: usize,
    seed: u64,
    #[serde(flatten)]
    ci: CiReport,
    simulated: usize,
    histogram_csv: String,
    kde_csv: Option<String>,
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_xy(path: &Path, xs: &[f64], ys: &[f64]) -> Result<()> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_xy_csv(BufWriter::new(f), ("x", "density"), xs, ys)?;
    Ok(())
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<()> {
    let seed = resolve_seed(a.seed);
    let series =
        load_ohlc_csv(&a.input).with_context(|| format!("cannot load {}", a.input.display()))?;
    eprintln!(
        "{} records, {} rows dropped",
        series.records.len(),
        series.dropped
    );
    let returns = ReturnSeries::from_records(&series.records, a.column)?;
    let (x, side) = match a.side {
        Side::NegativeAbs => (negative_abs_returns(&returns.values)?, "negative-abs"),
        Side::Full => (returns.values.clone(), "full"),
    };
    eprintln!("{} observations", x.len());

    let fitter = Fitter::new(a.family, a.nparams)?.with_multistart(a.multistart);
    let ci = if a.replicates > 0 {
        run_bootstrap(&x, &fitter, a.level, a.replicates, seed)?
    } else {
        CiReport {
            fit: FitReport::new(fitter.fit(&x)?),
            level: a.level,
            intervals: None,
            bootstrap: None,
        }
    };

    let hist = histogram(&x, a.bins)?;
    let hist_path = with_suffix(&a.out_prefix, "_hist.csv");
    write_xy(&hist_path, &hist.centers, &hist.density)?;

    let fit = ci.fit.fit;
    let n_sim = 2 * x.len();
    let kde_path = match draw(
        a.family,
        fit.alpha,
        fit.delta,
        fit.mu,
        n_sim,
        &mut RngStream::new(seed, SIMULATION_STREAM),
    ) {
        Ok(sim) => {
            let lo = hist.centers[0] - 0.5 * hist.width;
            let hi = hist.centers[hist.centers.len() - 1] + 0.5 * hist.width;
            let path = with_suffix(&a.out_prefix, "_kde.csv");
            let density = match a.side {
                Side::NegativeAbs => {
                    let grid = linspace(0.0, hi, a.grid_points);
                    let d = kde_boundary_corrected(&sim, a.bandwidth, &grid)?;
                    (grid, d)
                }
                Side::Full => {
                    let grid = linspace(lo, hi, a.grid_points);
                    let d = kde_gaussian(&sim, a.bandwidth, &grid)?;
                    (grid, d)
                }
            };
            write_xy(&path, &density.0, &density.1)?;
            Some(path)
        }
        Err(e) => {
            eprintln!("warning: no simulated overlay: {e}");
            None
        }
    };

    let report = AnalyzeReport {
        input: a.input.display().to_string(),
        column: a.column,
        side,
        records: series.records.len(),
        dropped_rows: series.dropped,
        observations: x.len(),
        seed,
        ci,
        simulated: if kde_path.is_some() { n_sim } else { 0 },
        histogram_csv: hist_path.display().to_string(),
        kde_csv: kde_path.map(|p| p.display().to_string()),
    };
    let json_path = with_suffix(&a.out_prefix, "_fit.json");
    let f = File::create(&json_path)
        .with_context(|| format!("cannot create {}", json_path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(f), &report)?;
    print_json(&report)
}

fn cmd_kde(a: KdeArgs) -> Result<()> {
    let x = input::read_numbers(&a.input)?;
    if x.is_empty() {
        bail!("{} contains no numbers", a.input.display());
    }
    let (dmin, dmax) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    let pad = 3.0 * a.bandwidth;
    let lo = a
        .grid_min
        .unwrap_or(if a.reflect { 0.0 } else { dmin - pad });
    let hi = a.grid_max.unwrap_or(dmax + pad);
    let grid = linspace(lo, hi, a.grid_points);
    let density = if a.reflect {
        kde_boundary_corrected(&x, a.bandwidth, &grid)?
    } else {
        kde_gaussian(&x, a.bandwidth, &grid)?
    };
    let mut out = output(a.out.as_deref())?;
    write_xy_csv(&mut out, ("x", "density"), &grid, &density)?;
    out.flush()?;
    Ok(())
}
