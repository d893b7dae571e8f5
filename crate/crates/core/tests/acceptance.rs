//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use breather_forge::cli::probe_seed;
use breather_forge::field::{self, synthesize, GridSpec, Parity, SpectralField};
use breather_forge::lattice::PotentialSpec;
use breather_forge::operators::{plane_wave, Operators};
use breather_forge::solver::{solve, BreatherResult, SolverConfig, Status, Strategy};
use breather_forge::validation::{self, bounds_report};

use common::{rel_l2_up_to_sign, shoot_breather, Boundary};

// criterion 1
const C1_TOL: f64 = 1e-12;
const C1_FIELDS: usize = 100;
// criterion 2
const C2_SLACK: f64 = 1e-12;
const C2_MODE_TOL: f64 = 1e-14;
const C2_PROBES: usize = 1000;
// criterion 3
const C3_REL_SLACK: f64 = 1e-9;
const C3_FIELDS: usize = 100;
// criterion 4
const C4_MARGIN: f64 = 1e-6;
const C4_FIELDS: usize = 100;
const C4_RADIUS_FRACTION: f64 = 0.9;
// criterion 5
const C5_TOL: f64 = 1e-14;
const C5_GRID: usize = 20;
// criterion 6
const C6_FP_TOL: f64 = 1e-10;
const C6_ORACLE_TOL: f64 = 1e-6;
const C6_ORACLE_SITES: usize = 32;
const C6_RUNTIME: Duration = Duration::from_secs(30);
// criterion 7
const C7_R2: f64 = 0.999;
// criterion 8
const C8_PERIODS: usize = 10;
const C8_STEPS: usize = 512;
const C8_RETURN: f64 = 1e-4;
const C8_ENERGY: f64 = 1e-8;
const C8_MOMENTUM: f64 = 1e-12;
const C8_ORDER_RANGE: (f64, f64) = (3.5, 4.5);
// criterion 9
const C9_IDEMPOTENT: f64 = 1e-14;
const C9_RELATION: f64 = 1e-12;
const C9_TIME_MEAN: f64 = 1e-13;

const OMEGA: f64 = 2.2;

struct Outcome {
    passed: bool,
    detail: String,
}

fn rng(offset: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(probe_seed().expect("seed").wrapping_add(offset))
}

/// Uniform-weight norm computed straight from the coefficients.
fn plain_norm(f: &SpectralField) -> f64 {
    (2.0 * f.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
}

fn weighted_norm(f: &SpectralField, lambda: f64, center: f64) -> f64 {
    let g = f.grid;
    let mut s = 0.0;
    for i in 0..g.n_sites {
        let w = (lambda * (g.site(i) as f64 - center).abs()).exp();
        s += w * f.site_coeffs(i).iter().map(|c| c.norm_sqr()).sum::<f64>();
    }
    (2.0 * s).sqrt()
}

fn quartic() -> PotentialSpec {
    PotentialSpec::beta_fput(1.0)
}

fn breather_config(parity: Parity) -> SolverConfig {
    let grid = GridSpec::for_potential(64, 16, OMEGA, &quartic()).unwrap();
    let mut c = SolverConfig::new(grid, quartic(), parity);
    c.strategy = Strategy::Hybrid;
    c.seed.amplitude = Some(0.8);
    c.seed.width = 1.0;
    c
}

struct Solved {
    result: BreatherResult,
    elapsed: Duration,
}

fn odd_breather() -> &'static Solved {
    static CELL: OnceLock<Solved> = OnceLock::new();
    CELL.get_or_init(|| {
        let t = Instant::now();
        let result = solve(&breather_config(Parity::Odd)).unwrap();
        Solved {
            result,
            elapsed: t.elapsed(),
        }
    })
}

fn even_breather() -> &'static BreatherResult {
    static CELL: OnceLock<BreatherResult> = OnceLock::new();
    CELL.get_or_init(|| solve(&breather_config(Parity::Even)).unwrap())
}

fn c1_operator_identities() -> Outcome {
    let grid = GridSpec::for_potential(64, 16, 3.0, &quartic()).unwrap();
    let ops = Operators::new(grid, quartic()).unwrap();
    let mut r = rng(1);
    let mut worst_inv: f64 = 0.0;
    for _ in 0..C1_FIELDS {
        let u = SpectralField::random(grid, &mut r);
        let inv = ops.apply_m_inverse(&u).unwrap();
        for back in [ops.apply_m(&inv), ops.apply_m_spectral(&inv)] {
            worst_inv = worst_inv.max(plain_norm(&back.sub(&u)) / plain_norm(&u));
        }
    }
    let mut worst_eig: f64 = 0.0;
    for m in 1..=grid.n_harmonics {
        for j in 0..grid.n_sites {
            let k = 2.0 * PI * j as f64 / grid.n_sites as f64;
            let nu = -9.0 * (m * m) as f64 + 4.0 * (k / 2.0).sin().powi(2);
            let f = plane_wave(grid, m, j);
            let expect = f.scaled(nu);
            for got in [ops.apply_m(&f), ops.apply_m_spectral(&f)] {
                worst_eig = worst_eig.max(plain_norm(&got.sub(&expect)) / plain_norm(&expect));
            }
        }
    }
    Outcome {
        passed: worst_inv <= C1_TOL && worst_eig <= C1_TOL,
        detail: format!("M(M^-1 u) rel err {worst_inv:.2e}, eigen-identity rel err {worst_eig:.2e}, limit {C1_TOL:e}"),
    }
}

fn c2_operator_norm() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (idx, omega_sq) in [5.0f64, 8.0, 12.0].into_iter().enumerate() {
        let grid = GridSpec::new(64, 16, 33, omega_sq.sqrt()).unwrap();
        let ops = Operators::new(grid, PotentialSpec::HARMONIC).unwrap();
        let bound = 1.0 / (omega_sq - 4.0);
        let mut r = rng(100 + idx as u64);
        let mut worst: f64 = 0.0;
        for _ in 0..C2_PROBES {
            let u = SpectralField::random(grid, &mut r);
            worst = worst.max(plain_norm(&ops.apply_m_inverse(&u).unwrap()) / plain_norm(&u));
        }
        let mode = plane_wave(grid, 1, grid.n_sites / 2);
        let attained = plain_norm(&ops.apply_m_inverse(&mode).unwrap()) / plain_norm(&mode);
        let ok = worst <= bound + C2_SLACK && (attained - bound).abs() <= C2_MODE_TOL;
        passed &= ok;
        parts.push(format!(
            "Omega^2={omega_sq}: max ratio {worst:.6} <= {bound:.6}, mode gap {:.1e}",
            (attained - bound).abs()
        ));
    }
    Outcome {
        passed,
        detail: parts.join("; "),
    }
}

fn c3_range_bound() -> Outcome {
    let grid = GridSpec::for_potential(64, 16, 3.0, &quartic()).unwrap();
    let ops = Operators::new(grid, quartic()).unwrap();
    let (kbar, alpha) = (3.0f64, 2.0f64);
    let mut worst: f64 = 0.0;
    let mut r = rng(200);
    for lambda in [0.0, 0.5] {
        for radius in [0.1, 0.5, 1.0] {
            for _ in 0..C3_FIELDS {
                let u = SpectralField::random(grid, &mut r);
                let u = u.scaled(radius / weighted_norm(&u, lambda, 0.0));
                let n_sq = weighted_norm(&ops.apply_n(&u), lambda, 0.0).powi(2);
                let bound = 2.0 * kbar * kbar * (1.0 + lambda.cosh()) * radius.powf(2.0 * (alpha + 1.0));
                worst = worst.max(n_sq / (bound * (1.0 + C3_REL_SLACK)));
            }
        }
    }
    Outcome {
        passed: worst <= 1.0,
        detail: format!("max ||N u||^2 / bound = {worst:.3e} over lambda in {{0, 0.5}}, R in {{0.1, 0.5, 1}}"),
    }
}

fn c4_contraction() -> Outcome {
    let omega = 12f64.sqrt();
    let grid = GridSpec::for_potential(64, 16, omega, &quartic()).unwrap();
    let ops = Operators::new(grid, quartic()).unwrap();
    let b = bounds_report(omega, 0.0, &quartic(), 0.0).unwrap();
    let radius = C4_RADIUS_FRACTION * (4.0f64 / 3.0).cbrt();
    let mut r = rng(300);
    let mut worst_gap = f64::INFINITY;
    for _ in 0..C4_FIELDS {
        let x = SpectralField::random(grid, &mut r);
        let x = x.scaled(radius / plain_norm(&x));
        let s = plain_norm(&ops.apply_s(&x).unwrap());
        worst_gap = worst_gap.min(plain_norm(&x) - s);
    }
    Outcome {
        passed: b.nonres_ok && worst_gap >= C4_MARGIN,
        detail: format!(
            "nonres_ok {}, min ||x|| - ||S x|| = {worst_gap:.4e} at ||x|| = {radius:.6}, margin {C4_MARGIN:e}",
            b.nonres_ok
        ),
    }
}

fn c5_bound_arithmetic() -> Outcome {
    let b = bounds_report(12f64.sqrt(), 0.0, &quartic(), 0.0).unwrap();
    let r_max = (4.0f64 / 3.0).powf(0.5);
    let r_crit = (4.0f64 / 3.0).powf(1.0 / 3.0);
    let closed_form = (b.r_max - r_max).abs() <= C5_TOL && (b.r_crit - r_crit).abs() <= C5_TOL;
    let mut mismatches = 0;
    for i in 0..C5_GRID {
        for j in 0..C5_GRID {
            let omega = 2.05 + 4.0 * i as f64 / (C5_GRID - 1) as f64;
            let lambda = 3.0 * j as f64 / (C5_GRID - 1) as f64;
            let rep = bounds_report(omega, lambda, &quartic(), 0.0).unwrap();
            let nonres = omega * omega > 4.0 + 3.0 * (2.0 * (1.0 + lambda.cosh())).sqrt();
            if (rep.r_crit < rep.r_max) != nonres || rep.nonres_ok != nonres {
                mismatches += 1;
            }
        }
    }
    Outcome {
        passed: closed_form && mismatches == 0,
        detail: format!(
            "r_max err {:.1e}, r_crit err {:.1e}, ordering mismatches {mismatches}/{}",
            (b.r_max - r_max).abs(),
            (b.r_crit - r_crit).abs(),
            C5_GRID * C5_GRID
        ),
    }
}

fn c6_oracle() -> Outcome {
    let solved = odd_breather();
    let r = &solved.result;
    let x = synthesize(&r.field).snapshot(0);
    let half = C6_ORACLE_SITES / 2;
    let center = r.field.grid.n_sites / 2;
    let spectral = &x[center - half..center + half];
    let orbit = shoot_breather(C6_ORACLE_SITES, Boundary::Truncated, 1.0, OMEGA, 0.75, 0.92, 2048);
    let err = rel_l2_up_to_sign(&orbit.x0, spectral);
    Outcome {
        passed: r.status == Status::Converged
            && r.fp_residual <= C6_FP_TOL
            && err <= C6_ORACLE_TOL
            && solved.elapsed < C6_RUNTIME,
        detail: format!(
            "status {}, fp_residual {:.2e}, oracle rel l2 {err:.2e} (limit {C6_ORACLE_TOL:e}, oracle residual {:.1e}), solve {:.2?}",
            r.status, r.fp_residual, orbit.residual, solved.elapsed
        ),
    }
}

fn c7_localization() -> Outcome {
    let r = &odd_breather().result;
    let fit = match validation::decay_rate_fit(r) {
        Ok(f) => f,
        Err(e) => {
            return Outcome {
                passed: false,
                detail: format!("decay fit failed: {e}"),
            }
        }
    };
    let profile = validation::site_profile(&r.field);
    let tail_finite = (0..=20).all(|i| {
        let lambda = 2.0 * fit.lambda_eff * i as f64 / 21.0;
        validation::weighted_tail_sum(&profile, lambda, 0.0).is_finite()
    });
    let mut upper_ok = true;
    let mut parts = Vec::new();
    for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let lambda = frac * fit.lambda_eff;
        let norm = weighted_norm(&r.field, lambda, 0.0);
        let b = bounds_report(OMEGA, lambda, &quartic(), norm).unwrap();
        if b.nonres0_ok {
            upper_ok &= norm <= b.r_max;
            parts.push(format!("lambda {lambda:.3}: {norm:.4} vs r_max {:.4}", b.r_max));
        }
    }
    Outcome {
        passed: fit.r_squared >= C7_R2 && fit.lambda_eff > 0.0 && tail_finite && upper_ok,
        detail: format!(
            "lambda_eff {:.6}, r^2 {:.6}, weighted sums finite {tail_finite}, ||x||_X0 <= r_max {upper_ok} [{}]",
            fit.lambda_eff,
            fit.r_squared,
            parts.join(", ")
        ),
    }
}

fn c8_dynamics() -> Outcome {
    let r = &odd_breather().result;
    let a = validation::integrate_trajectory(&r.field, &quartic(), C8_PERIODS, C8_STEPS).unwrap();
    let b = validation::integrate_trajectory(&r.field, &quartic(), C8_PERIODS, 2 * C8_STEPS).unwrap();
    let ratio = a.period_return_error / b.period_return_error;
    let exact_period = (a.dt * C8_STEPS as f64 - 2.0 * PI / OMEGA).abs() <= 1e-15;
    Outcome {
        passed: a.period_return_error <= C8_RETURN
            && a.energy_drift <= C8_ENERGY
            && a.momentum_drift <= C8_MOMENTUM
            && (C8_ORDER_RANGE.0..=C8_ORDER_RANGE.1).contains(&ratio)
            && exact_period,
        detail: format!(
            "return {:.2e}, energy drift {:.2e}, momentum drift {:.2e}, dt-halving ratio {ratio:.3}",
            a.period_return_error, a.energy_drift, a.momentum_drift
        ),
    }
}

/// `max |u_n(t_j) + u_partner(t_j')|` straight from the samples.
fn relation_violation(f: &SpectralField, parity: Parity) -> f64 {
    let g = f.grid;
    let x = synthesize(f);
    let nt = x.n_time;
    let mut worst: f64 = 0.0;
    for i in 0..g.n_sites {
        let n = g.site(i);
        for j in 0..nt {
            let other = match parity {
                Parity::Even => x.get(g.index(-(n + 1)), j),
                Parity::Odd => x.get(g.index(-n), (j + nt / 2) % nt),
            };
            worst = worst.max((x.get(i, j) + other).abs());
        }
    }
    worst
}

fn c9_symmetry() -> Outcome {
    let grid = GridSpec::new(64, 16, 256, OMEGA).unwrap();
    let mut r = rng(900);
    let mut idem: f64 = 0.0;
    for _ in 0..20 {
        let u = SpectralField::random(grid, &mut r);
        for parity in [Parity::Even, Parity::Odd] {
            let once = field::project(&u, parity);
            let twice = field::project(&once, parity);
            let d = twice
                .coeffs
                .iter()
                .zip(&once.coeffs)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            idem = idem.max(d);
        }
    }
    let mut relation: f64 = 0.0;
    let mut mean_ratio: f64 = 0.0;
    let mut statuses = Vec::new();
    for (res, parity) in [(&odd_breather().result, Parity::Odd), (even_breather(), Parity::Even)] {
        statuses.push(format!("{parity} {}", res.status));
        relation = relation.max(relation_violation(&res.field, parity));
        let x = synthesize(&res.field);
        let peak = x.max_abs();
        for i in 0..x.n_sites {
            let mean = x.site(i).iter().sum::<f64>() / x.n_time as f64;
            mean_ratio = mean_ratio.max(mean.abs() / peak);
        }
    }
    let converged = odd_breather().result.converged() && even_breather().converged();
    Outcome {
        passed: converged && idem <= C9_IDEMPOTENT && relation <= C9_RELATION && mean_ratio <= C9_TIME_MEAN,
        detail: format!(
            "{}; idempotence {idem:.1e}, relation violation {relation:.1e}, time mean / peak {mean_ratio:.1e}",
            statuses.join(", ")
        ),
    }
}

fn run_solve(bin: &str, config: &Path, out: &Path) -> i32 {
    Command::new(bin)
        .args(["solve", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("run binary")
        .status
        .code()
        .unwrap_or(-1)
}

fn c10_reproducibility() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_breather-forge");
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    let cfg = base.join("oracle.conf");
    std::fs::write(&cfg, format!("grid.omega = {OMEGA}\nseed.amplitude = 0.8\nsolver.parity = odd\n")).unwrap();
    let first = run_solve(bin, &cfg, &base.join("first"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(base.join("first/manifest.json")).unwrap()).unwrap();
    let echo = base.join("echo.conf");
    std::fs::write(&echo, manifest["config_echo"].as_str().unwrap()).unwrap();
    let codes = [first, run_solve(bin, &echo, &base.join("a")), run_solve(bin, &echo, &base.join("b"))];
    let names: Vec<String> = manifest["artifact_paths"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .chain(["manifest.json".to_string()])
        .collect();
    let mut differing = Vec::new();
    for name in &names {
        let bytes: Vec<Vec<u8>> = ["first", "a", "b"]
            .iter()
            .map(|d| std::fs::read(base.join(d).join(name)).unwrap_or_default())
            .collect();
        if bytes[0] != bytes[1] || bytes[1] != bytes[2] || bytes[0].is_empty() {
            differing.push(name.clone());
        }
    }
    Outcome {
        passed: codes == [0, 0, 0] && differing.is_empty(),
        detail: format!(
            "exit codes {codes:?}, {} files compared, differing {differing:?}",
            names.len()
        ),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("spectral operator identities", c1_operator_identities),
        ("inverse operator norm bound", c2_operator_norm),
        ("range bound of N", c3_range_bound),
        ("contraction below r_crit", c4_contraction),
        ("bound arithmetic", c5_bound_arithmetic),
        ("breather vs shooting oracle", c6_oracle),
        ("exponential localization", c7_localization),
        ("dynamical validation", c8_dynamics),
        ("symmetry suite", c9_symmetry),
        ("reproducibility", c10_reproducibility),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| Outcome {
            passed: false,
            detail: format!(
                "panicked: {}",
                e.downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default()
            ),
        });
        if !outcome.passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {}",
            i + 1,
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
