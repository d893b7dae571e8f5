//! Command-line front end: `solve`, `sweep`, `verify`, `integrate`, `bounds`.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{GridSpec, Parity};
use crate::lattice::PotentialSpec;
use crate::operators::probe_operator_norm;
use crate::solver::{self, BreatherResult, Status, Strategy};
use crate::validation::{self, TrajectoryReport};
use config::{parse_config, serialize_config, ConfigDraft, ParsedConfig};
use output::{render_outputs, write_artifacts, write_atomic, RunManifest};

pub const SEED_ENV: &str = "BREATHER_FORGE_SEED";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_COLLAPSE: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
/// Diverged, hit the iteration cap, or failed verification.
pub const EXIT_FAILED: i32 = 4;

/// Verification thresholds.
pub const VERIFY_PARITY: f64 = 1e-12;
pub const VERIFY_TIME_MEAN: f64 = 1e-13;
pub const VERIFY_CLASSICAL: f64 = 1e-8;
pub const VERIFY_RETURN: f64 = 1e-4;
pub const VERIFY_ENERGY: f64 = 1e-8;
pub const VERIFY_MOMENTUM: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "breather-forge", version, about = "Spectral fixed-point solver and verifier for lattice breathers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Default, Args)]
struct Common {
    /// Configuration file (`section.key = value` lines)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    omega: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    parity: Option<Parity>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    n_sites: Option<usize>,
    #[arg(long)]
    n_harmonics: Option<usize>,
    /// Quartic coefficient
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Cubic coefficient
    #[arg(long, allow_negative_numbers = true)]
    cubic: Option<f64>,
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Peak seed amplitude
    #[arg(long, allow_negative_numbers = true)]
    amplitude: Option<f64>,
    #[arg(long)]
    width: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for one breather and write the artifact set
    Solve(Common),
    /// Frequency continuation over equally spaced points
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        omega_from: f64,
        #[arg(long)]
        omega_to: f64,
        /// Number of frequencies, endpoints included
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
    /// Re-solve from a manifest and check the result
    Verify {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        periods: usize,
        #[arg(long, default_value_t = 512)]
        steps_per_period: usize,
    },
    /// Integrate a solution in time
    Integrate {
        /// Load the solution written by `solve`
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        periods: usize,
        #[arg(long, default_value_t = 512)]
        steps_per_period: usize,
    },
    /// Existence and contraction radii
    Bounds {
        #[arg(long)]
        omega2: f64,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, allow_negative_numbers = true)]
        beta: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        cubic: Option<f64>,
        /// Evaluate ring membership for this norm
        #[arg(long)]
        x0_norm: Option<f64>,
        /// Random probes of the inverse linear operator norm
        #[arg(long)]
        probes: Option<usize>,
    },
}

/// Exit code for an error.
pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Resonance { .. }
        | Error::Aliasing { .. }
        | Error::WeightOverflow { .. }
        | Error::NoGlobalGrowthBound { .. }
        | Error::InvalidGrid(_)
        | Error::InvalidParameter(_)
        | Error::InsufficientTail { .. }
        | Error::NonzeroMomentum { .. } => EXIT_PRECONDITION,
        Error::BlowUp { .. } | Error::NotConverged(_) => EXIT_FAILED,
        _ => EXIT_USAGE,
    }
}

pub fn status_code(status: Status) -> i32 {
    match status {
        Status::Converged => EXIT_OK,
        Status::CollapsedToZero => EXIT_COLLAPSE,
        Status::Diverged | Status::MaxIter => EXIT_FAILED,
    }
}

/// Seed for random probes, from `BREATHER_FORGE_SEED` (default 0).
pub fn probe_seed() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("{SEED_ENV} must be an unsigned integer, got `{s}`"))),
        Err(_) => Ok(0),
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            error_code(&e)
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Solve(common) => cmd_solve(&common),
        Command::Sweep {
            common,
            omega_from,
            omega_to,
            steps,
        } => cmd_sweep(&common, omega_from, omega_to, steps),
        Command::Verify {
            manifest,
            out,
            periods,
            steps_per_period,
        } => cmd_verify(&manifest, out.as_deref(), periods, steps_per_period),
        Command::Integrate {
            manifest,
            common,
            periods,
            steps_per_period,
        } => cmd_integrate(manifest.as_deref(), &common, periods, steps_per_period),
        Command::Bounds {
            omega2,
            lambda,
            beta,
            cubic,
            x0_norm,
            probes,
        } => cmd_bounds(omega2, lambda, beta, cubic, x0_norm, probes),
    }
}

fn load_config(common: &Common) -> Result<ParsedConfig> {
    let mut draft = match &common.config {
        Some(p) => ConfigDraft::parse(&fs::read_to_string(p)?)?,
        None => ConfigDraft::default(),
    };
    let overrides: [(&str, Option<String>); 11] = [
        ("grid.omega", common.omega.map(|v| format!("{v:?}"))),
        ("weight.lambda", common.lambda.map(|v| format!("{v:?}"))),
        ("solver.parity", common.parity.map(|v| v.to_string())),
        ("grid.n_sites", common.n_sites.map(|v| v.to_string())),
        ("grid.n_harmonics", common.n_harmonics.map(|v| v.to_string())),
        ("potential.quartic", common.beta.map(|v| format!("{v:?}"))),
        ("potential.cubic", common.cubic.map(|v| format!("{v:?}"))),
        ("solver.strategy", common.strategy.map(|v| v.to_string())),
        ("solver.max_iter", common.max_iter.map(|v| v.to_string())),
        ("seed.amplitude", common.amplitude.map(|v| format!("{v:?}"))),
        ("seed.width", common.width.map(|v| format!("{v:?}"))),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            draft.set(key, v)?;
        }
    }
    let parsed = draft.resolve()?;
    for w in &parsed.warnings {
        eprintln!("warning: {w}");
    }
    Ok(parsed)
}

fn out_dir(common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("breather-out"))
}

fn print_result(r: &BreatherResult) {
    println!("status           {}", r.status);
    println!("omega            {:?}", r.omega);
    println!("parity           {}", r.parity);
    println!("iterations       {}", r.iterations);
    println!("fp_residual      {:e}", r.fp_residual);
    println!("strong_residual  {:e}", r.strong_residual);
    println!("x0_norm          {:?}", r.x0_norm);
    if let Some(f) = r.decay_fit {
        println!("lambda_eff       {:?} (r^2 = {:?})", f.lambda_eff, f.r_squared);
    }
    if let Some(b) = r.bounds {
        println!("r_max            {:?}", b.r_max);
        println!("r_crit           {:?}", b.r_crit);
        println!("nonres_ok        {}", b.nonres_ok);
        if r.converged() && r.x0_norm > b.r_max {
            println!("note             x0_norm exceeds r_max");
        }
        if let Some(ring) = b.in_ring {
            println!("in_ring          {ring}");
        }
    }
    if let Some(m) = &r.message {
        println!("message          {m}");
    }
}

fn cmd_solve(common: &Common) -> Result<i32> {
    let parsed = load_config(common)?;
    let result = solver::solve(&parsed.config)?;
    let echo = serialize_config(&parsed.config);
    let (_, artifacts) = render_outputs(&result, &echo, None)?;
    let dir = out_dir(common);
    write_artifacts(&dir, &artifacts)?;
    print_result(&result);
    println!("output           {}", dir.display());
    Ok(status_code(result.status))
}

#[derive(Serialize)]
struct SweepRow {
    omega: f64,
    status: String,
    iterations: Option<usize>,
    fp_residual: Option<f64>,
    x0_norm: Option<f64>,
    r_max: Option<f64>,
    r_crit: Option<f64>,
    nonres_ok: Option<bool>,
    bisected: bool,
    error: String,
}

fn cmd_sweep(common: &Common, from: f64, to: f64, steps: usize) -> Result<i32> {
    let mut common = common.clone();
    common.omega.get_or_insert(from);
    let parsed = load_config(&common)?;
    let points = solver::continuation_sweep(&parsed.config, from, to, steps)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in &points {
        let r = p.result.as_ref();
        let row = SweepRow {
            omega: p.omega,
            status: r.map_or_else(|| "error".to_string(), |r| r.status.to_string()),
            iterations: r.map(|r| r.iterations),
            fp_residual: r.map(|r| r.fp_residual),
            x0_norm: r.map(|r| r.x0_norm),
            r_max: r.and_then(|r| r.bounds).map(|b| b.r_max),
            r_crit: r.and_then(|r| r.bounds).map(|b| b.r_crit),
            nonres_ok: r.and_then(|r| r.bounds).map(|b| b.nonres_ok),
            bisected: p.bisected,
            error: p.error.clone().unwrap_or_default(),
        };
        println!(
            "omega {:<8.5} {:<18} x0_norm {}",
            row.omega,
            row.status,
            row.x0_norm.map_or("-".into(), |v| format!("{v:.10}"))
        );
        w.serialize(row)?;
    }
    w.flush()?;
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    let dir = out_dir(&common);
    fs::create_dir_all(&dir)?;
    write_atomic(&dir.join("sweep.csv"), &bytes)?;
    write_atomic(&dir.join("sweep_config.txt"), serialize_config(&parsed.config).as_bytes())?;
    Ok(EXIT_OK)
}

/// One named pass/fail line of a verification report.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        }
    }

    fn flag(name: &str, passed: bool) -> Self {
        Self {
            name: name.into(),
            value: if passed { 1.0 } else { 0.0 },
            limit: 1.0,
            passed,
        }
    }
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    schema_version: u32,
    manifest: String,
    checks: Vec<Check>,
    trajectory: Option<TrajectoryReport>,
    x0_norm: f64,
    r_max: Option<f64>,
    r_crit: Option<f64>,
    all_passed: bool,
}

fn cmd_verify(manifest_path: &Path, out: Option<&Path>, periods: usize, steps_per_period: usize) -> Result<i32> {
    let manifest = RunManifest::load(manifest_path)?;
    if manifest.schema_version != output::SCHEMA_VERSION {
        return Err(Error::InvalidParameter(format!(
            "unsupported schema_version {}",
            manifest.schema_version
        )));
    }
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let config = parse_config(&manifest.config_echo)?.config;
    let result = solver::solve(&config)?;
    if result.status != Status::Converged {
        print_result(&result);
        return Ok(status_code(result.status));
    }

    let mut checks = Vec::new();
    let stored_trace = output::read_trace_csv(&dir.join(output::TRACE))?;
    checks.push(Check::flag("trace_bit_identical", stored_trace == result.trace));
    let (_, artifacts) = render_outputs(&result, &manifest.config_echo, manifest.trajectory)?;
    let identical = artifacts
        .iter()
        .all(|a| fs::read(dir.join(&a.name)).is_ok_and(|b| b == a.bytes));
    checks.push(Check::flag("artifacts_bit_identical", identical));
    checks.push(Check::at_most("fp_residual", result.fp_residual, config.tol_residual));
    checks.push(Check::at_most(
        "strong_residual",
        result.strong_residual,
        10.0 * config.tol_residual * result.x2_norm,
    ));
    let f = &result.field;
    checks.push(Check::at_most(
        "parity_relation",
        validation::parity_relation_error(f, config.parity),
        VERIFY_PARITY,
    ));
    checks.push(Check::at_most("time_mean", validation::time_mean_ratio(f), VERIFY_TIME_MEAN));
    checks.push(Check::at_most(
        "classical_residual",
        validation::classical_residual(f, &config.potential),
        VERIFY_CLASSICAL,
    ));
    let traj = validation::integrate_trajectory(f, &config.potential, periods, steps_per_period)?;
    checks.push(Check::at_most("period_return_error", traj.period_return_error, VERIFY_RETURN));
    checks.push(Check::at_most("energy_drift", traj.energy_drift, VERIFY_ENERGY));
    checks.push(Check::at_most("momentum_drift", traj.momentum_drift, VERIFY_MOMENTUM));

    for c in &checks {
        println!(
            "{} {:<24} {:e} (limit {:e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.limit
        );
    }
    let all_passed = checks.iter().all(|c| c.passed);
    if let Some(b) = result.bounds {
        println!("info x0_norm {:?}, r_max {:?}, r_crit {:?}", result.x0_norm, b.r_max, b.r_crit);
    }
    let report = VerifyReport {
        schema_version: output::SCHEMA_VERSION,
        manifest: manifest_path.display().to_string(),
        checks,
        trajectory: Some(traj),
        x0_norm: result.x0_norm,
        r_max: result.bounds.map(|b| b.r_max),
        r_crit: result.bounds.map(|b| b.r_crit),
        all_passed,
    };
    let target = out.unwrap_or(dir);
    fs::create_dir_all(target)?;
    write_atomic(&target.join("verify.json"), (serde_json::to_string_pretty(&report)? + "\n").as_bytes())?;
    Ok(if all_passed { EXIT_OK } else { EXIT_FAILED })
}

fn cmd_integrate(manifest: Option<&Path>, common: &Common, periods: usize, steps_per_period: usize) -> Result<i32> {
    let (field, potential, dir) = match manifest {
        Some(path) => {
            let m = RunManifest::load(path)?;
            let config = parse_config(&m.config_echo)?.config;
            let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
            let field = output::read_spectral_csv(&dir.join(output::SPECTRAL), config.grid)?;
            (field, config.potential, common.out.clone().unwrap_or(dir))
        }
        None => {
            let parsed = load_config(common)?;
            let result = solver::solve(&parsed.config)?;
            if !result.converged() {
                print_result(&result);
                return Ok(status_code(result.status));
            }
            (result.field, parsed.config.potential, out_dir(common))
        }
    };
    let report = validation::integrate_trajectory(&field, &potential, periods, steps_per_period)?;
    println!("periods              {}", report.periods_integrated);
    println!("dt                   {:?}", report.dt);
    println!("period_return_error  {:e}", report.period_return_error);
    println!("final_return_error   {:e}", report.final_return_error);
    println!("energy_drift         {:e}", report.energy_drift);
    println!("momentum_drift       {:e}", report.momentum_drift);
    fs::create_dir_all(&dir)?;
    write_atomic(&dir.join("trajectory.json"), (serde_json::to_string_pretty(&report)? + "\n").as_bytes())?;
    Ok(EXIT_OK)
}

fn cmd_bounds(
    omega2: f64,
    lambda: f64,
    beta: Option<f64>,
    cubic: Option<f64>,
    x0_norm: Option<f64>,
    probes: Option<usize>,
) -> Result<i32> {
    if !(omega2 > 0.0) || !(lambda >= 0.0) {
        return Err(Error::Config {
            line: 0,
            message: "--omega2 must be positive and --lambda non-negative".into(),
        });
    }
    let potential = match (cubic, beta) {
        (None, None) => PotentialSpec::beta_fput(1.0),
        (c, b) => PotentialSpec::new(c.unwrap_or(0.0), b.unwrap_or(0.0)),
    };
    let omega = omega2.sqrt();
    let b = validation::bounds_report(omega, lambda, &potential, x0_norm.unwrap_or(f64::NAN))?;
    println!("omega^2      {omega2:?}");
    println!("lambda       {lambda:?}");
    println!("kbar         {:?}", b.kbar);
    println!("alpha        {:?}", b.growth_alpha);
    println!("r_max        {:?}", b.r_max);
    println!("r_crit       {:?}", b.r_crit);
    println!("nonres0_ok   {}", b.nonres0_ok);
    println!("nonres_ok    {}", b.nonres_ok);
    if x0_norm.is_some() {
        match b.in_ring {
            Some(r) => println!("in_ring      {r}"),
            None => println!("in_ring      not evaluated"),
        }
    }
    if let Some(trials) = probes {
        let seed = probe_seed()?;
        let grid = GridSpec::new(64, 16, 33, omega)?;
        let p = probe_operator_norm(omega, grid, trials, seed)?;
        println!("probe_seed   {seed}");
        println!("probe_max    {:?}", p.empirical);
        println!("probe_exact  {:?}", p.exact);
        println!("probe_mode   {:?}", p.extremal);
    }
    Ok(EXIT_OK)
}
