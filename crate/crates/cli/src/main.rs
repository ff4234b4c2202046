//! `hardcap`: bound tables, hard cap model simulation, the verification
//! suite and code construction from the command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
//! 3 numerical failure.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod parse;

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hardcap::bounds::{bounds_table, default_lambda_log, write_bounds_csv, write_bounds_json};
use hardcap::codes::{
    anneal_code, compare_to_bounds, geometric_schedule, rsa_maximal_code, write_construction_csv,
    write_construction_json, ConstructionRecord,
};
use hardcap::experiments::{run_selected, CheckStatus, SuiteConfig, CHECK_FAMILIES};
use hardcap::fmt::real;
use hardcap::geometry::{write_code_csv, write_code_json, Cap, UnitVector};
use hardcap::hardcap::{
    estimate_alpha, estimate_free_area, estimate_size_distribution, ModelParams, Region, RegionSpec,
};
use hardcap::seed::rng_from_seed;
use hardcap::stats::EstimateWithError;
use hardcap::Error;

use parse::{parse_angle, parse_dims, parse_region, DimRange, RegionArg};

/// Environment variable naming the directory for outputs when `--output` is absent.
const OUTPUT_DIR_ENV: &str = "HARDCAP_OUTPUT_DIR";

const DEFAULT_SEED: u64 = 20_240_229;

#[derive(Parser, Debug)]
#[command(name = "hardcap", version, about = "Spherical codes and the hard cap model")]
struct Cli {
    /// Worker threads (affects wall time only, never results).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Rsa,
    Anneal,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Table of lower and upper bounds over a range of dimensions.
    Bounds {
        /// Dimension or range: N, A..B, A..B:STEP.
        #[arg(long, value_parser = parse_dims)]
        d: DimRange,
        /// Code angle: pi/3, 60deg or radians.
        #[arg(long, value_parser = parse_angle, default_value = "pi/3")]
        theta: f64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo estimates for the hard cap model; writes a run manifest.
    Simulate {
        #[arg(long)]
        d: usize,
        #[arg(long, value_parser = parse_angle, default_value = "pi/3")]
        theta: f64,
        /// Fugacity; defaults to 1/(d s_d(q(theta))).
        #[arg(long)]
        lambda: Option<f64>,
        /// sphere or cap:PSI.
        #[arg(long, value_parser = parse_region, default_value = "sphere")]
        region: RegionArg,
        /// Configurations drawn per estimate.
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        /// Also estimate the free area.
        #[arg(long)]
        free_area: bool,
        /// Test points per configuration for the free area.
        #[arg(long, default_value_t = 64)]
        n_test: u64,
        /// Also estimate the size distribution.
        #[arg(long)]
        size_dist: bool,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Runs the verification suite; exit status 1 if any check fails.
    Verify {
        /// Reduced budgets for a fast smoke run.
        #[arg(long)]
        quick: bool,
        /// Run only these check families (repeatable).
        #[arg(long)]
        only: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Builds an explicit code by RSA or annealing.
    Construct {
        #[arg(long)]
        d: usize,
        #[arg(long, value_parser = parse_angle, default_value = "pi/3")]
        theta: f64,
        #[arg(long, value_enum, default_value = "anneal")]
        method: MethodArg,
        /// RSA: test points per saturation estimate.
        #[arg(long, default_value_t = 10_000)]
        test_points: u64,
        /// RSA: stop once the estimated free fraction is below this.
        #[arg(long, default_value_t = 1e-3)]
        stop_free_fraction: f64,
        /// Anneal: first and last fugacity of the geometric schedule.
        #[arg(long, default_value_t = 1.0)]
        lambda_min: f64,
        #[arg(long, default_value_t = 1e4)]
        lambda_max: f64,
        #[arg(long, default_value_t = 20)]
        levels: usize,
        #[arg(long, default_value_t = 100)]
        sweeps_per_level: u64,
        #[arg(long, default_value_t = 8)]
        restarts: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also write the code itself (format from the extension: .csv or .json).
        #[arg(long)]
        save_code: Option<PathBuf>,
    },
}

/// Errors surfaced to the user, tagged with their exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
    /// The reader went away (e.g. `| head`); not an error.
    BrokenPipe,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(e) => e.into(),
            Error::Domain(_) | Error::Invalid(_) | Error::DimensionMismatch { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            return Failure::BrokenPipe;
        }
        Failure::Usage(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(e) => e.into(),
            other => Failure::Usage(format!("csv: {other:?}")),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn check_acute(theta: f64) -> Result<(), Failure> {
    if !(theta > 0.0 && theta < FRAC_PI_2) {
        return Err(Failure::Usage(format!(
            "theta = {theta} is not acute: codes and bounds here are restricted to 0 < theta < pi/2"
        )));
    }
    Ok(())
}

/// Opens the destination: `--output`, else `$HARDCAP_OUTPUT_DIR/<stem>.<ext>`, else stdout.
fn sink(output: &Option<PathBuf>, stem: &str, format: Format) -> Result<Box<dyn Write>, Failure> {
    let path = match output {
        Some(p) => Some(p.clone()),
        None => std::env::var_os(OUTPUT_DIR_ENV).map(|dir| PathBuf::from(dir).join(format!("{stem}.{}", format.ext()))),
    };
    Ok(match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            Box::new(BufWriter::new(File::create(&p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_bounds(d: DimRange, theta: f64, format: Format, output: &Option<PathBuf>) -> Result<ExitCode, Failure> {
    check_acute(theta)?;
    let rows = bounds_table(d.lo, d.hi, d.step, theta)?;
    let mut w = sink(output, "bounds", format)?;
    match format {
        Format::Csv => write_bounds_csv(&rows, &mut w)?,
        Format::Json => {
            write_bounds_json(&rows, &mut w)?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct Budgets {
    budget: u64,
    n_test: Option<u64>,
}

#[derive(Serialize)]
struct Manifest {
    params: ModelParams,
    region: RegionSpec,
    seed: u64,
    budgets: Budgets,
    estimates: BTreeMap<String, EstimateWithError>,
    wall_time_s: f64,
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    d: usize,
    theta: f64,
    lambda: Option<f64>,
    region: RegionArg,
    budget: u64,
    free_area: bool,
    n_test: u64,
    size_dist: bool,
    seed: u64,
    format: Format,
    output: &Option<PathBuf>,
) -> Result<ExitCode, Failure> {
    check_acute(theta)?;
    let start = Instant::now();
    eprintln!("seed: {seed}");
    let lambda = match lambda {
        Some(l) => l,
        None => {
            let l = default_lambda_log(d, theta)?.exp();
            eprintln!("note: lambda defaults to 1/(d s_d(q(theta))) = {l}");
            l
        }
    };
    let params = ModelParams::new(d, theta, lambda)?;
    let region = match region {
        RegionArg::Sphere => Region::full_sphere(d)?,
        RegionArg::Cap(psi) => Region::cap(Cap::new(UnitVector::basis(d, 0)?, psi)?),
    };
    let mut rng = rng_from_seed(seed);
    let mut estimates = BTreeMap::new();
    estimates.insert("alpha".to_string(), estimate_alpha(&params, &region, budget, &mut rng)?);
    if free_area {
        estimates.insert(
            "free_area".to_string(),
            estimate_free_area(&params, &region, budget, n_test, &mut rng)?,
        );
    }
    if size_dist {
        let sd = estimate_size_distribution(&params, &region, budget, &mut rng)?;
        for (k, (p, se)) in sd.probs.iter().zip(&sd.stderr).enumerate() {
            estimates.insert(format!("size_p{k:03}"), EstimateWithError::new(*p, *se, sd.n_samples));
        }
        estimates.insert("size_variance".to_string(), sd.variance);
    }
    let manifest = Manifest {
        params,
        region: region.describe(),
        seed,
        budgets: Budgets {
            budget,
            n_test: free_area.then_some(n_test),
        },
        estimates,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let mut w = sink(output, "simulate", format)?;
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut w, &manifest)?;
            writeln!(w)?;
        }
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(&mut w);
            wtr.write_record(["name", "value", "stderr", "n"])?;
            for (name, e) in &manifest.estimates {
                wtr.write_record([name.clone(), real(e.value), real(e.stderr), e.n_samples.to_string()])?;
            }
            wtr.flush()?;
        }
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(quick: bool, only: &[String], seed: u64, format: Format, output: &Option<PathBuf>) -> Result<ExitCode, Failure> {
    if let Some(bad) = only.iter().find(|o| !CHECK_FAMILIES.contains(&o.as_str())) {
        return Err(Failure::Usage(format!(
            "unknown check '{bad}'; known checks: {}",
            CHECK_FAMILIES.join(", ")
        )));
    }
    let config = if quick { SuiteConfig::quick() } else { SuiteConfig::default() };
    let report = run_selected(&config, seed, only)?;
    let mut w = sink(output, "verify", format)?;
    match format {
        Format::Json => report.write_json(&mut w)?,
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(&mut w);
            wtr.write_record(["name", "status", "statistic", "threshold", "seed"])?;
            let opt = |x: Option<f64>| x.map(real).unwrap_or_default();
            for c in &report.checks {
                let status = match c.status {
                    CheckStatus::Pass => "pass",
                    CheckStatus::Fail => "fail",
                    CheckStatus::Inconclusive => "inconclusive",
                };
                wtr.write_record([c.name.clone(), status.into(), opt(c.statistic), opt(c.threshold), c.seed.to_string()])?;
            }
            wtr.flush()?;
        }
    }
    w.flush()?;
    let s = report.summary;
    eprintln!("passed {}, failed {}, inconclusive {}", s.passed, s.failed, s.inconclusive);
    for c in report.checks.iter().filter(|c| c.status != CheckStatus::Pass) {
        let tag = if c.status == CheckStatus::Fail { "FAILED" } else { "warning: inconclusive" };
        eprintln!("{tag}: {} ({})", c.name, c.details);
    }
    Ok(if s.failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[allow(clippy::too_many_arguments)]
fn cmd_construct(
    d: usize,
    theta: f64,
    method: MethodArg,
    test_points: u64,
    stop_free_fraction: f64,
    schedule: (f64, f64, usize),
    sweeps_per_level: u64,
    restarts: u64,
    seed: u64,
    format: Format,
    output: &Option<PathBuf>,
    save_code: &Option<PathBuf>,
) -> Result<ExitCode, Failure> {
    check_acute(theta)?;
    if d < 2 {
        return Err(Failure::Usage(format!("dimension must be >= 2, got {d}")));
    }
    let mut rng = rng_from_seed(seed);
    let result = match method {
        MethodArg::Rsa => rsa_maximal_code(d, theta, &mut rng, test_points, stop_free_fraction)?,
        MethodArg::Anneal => {
            let sched = geometric_schedule(schedule.0, schedule.1, schedule.2)?;
            anneal_code(d, theta, &sched, sweeps_per_level, restarts, &mut rng)?
        }
    };
    let comparison = compare_to_bounds(&result)?;
    eprintln!("size {} (covering bound {:?})", result.code.len(), comparison.covering_lb);
    if let Some(path) = save_code {
        let f = BufWriter::new(File::create(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?);
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => write_code_csv(&result.code, f)?,
            _ => write_code_json(&result.code, f)?,
        }
    }
    let mut w = sink(output, "construct", format)?;
    match format {
        Format::Json => write_construction_json(&ConstructionRecord { result, comparison }, &mut w)?,
        Format::Csv => write_construction_csv(&[comparison], &mut w)?,
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Bounds { d, theta, format, output } => cmd_bounds(d, theta, format, &output),
        Command::Simulate {
            d,
            theta,
            lambda,
            region,
            budget,
            free_area,
            n_test,
            size_dist,
            seed,
            format,
            output,
        } => cmd_simulate(d, theta, lambda, region, budget, free_area, n_test, size_dist, seed, format, &output),
        Command::Verify {
            quick,
            only,
            seed,
            format,
            output,
        } => cmd_verify(quick, &only, seed, format, &output),
        Command::Construct {
            d,
            theta,
            method,
            test_points,
            stop_free_fraction,
            lambda_min,
            lambda_max,
            levels,
            sweeps_per_level,
            restarts,
            seed,
            format,
            output,
            save_code,
        } => cmd_construct(
            d,
            theta,
            method,
            test_points,
            stop_free_fraction,
            (lambda_min, lambda_max, levels),
            sweeps_per_level,
            restarts,
            seed,
            format,
            &output,
            &save_code,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::BrokenPipe) => ExitCode::SUCCESS,
    }
}
