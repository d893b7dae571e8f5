use std::sync::OnceLock;

use breather_forge::field::{self, GridSpec, Parity, SpectralField, WeightSpec};
use breather_forge::lattice::PotentialSpec;
use breather_forge::solver::{
    continuation_sweep, initial_field, newton_solve, picard_solve, refine, solve, BreatherResult, SolverConfig,
    Status, Strategy,
};
use breather_forge::validation;
use breather_forge::Error;

fn config(omega: f64, parity: Parity) -> SolverConfig {
    let p = PotentialSpec::beta_fput(1.0);
    let grid = GridSpec::for_potential(64, 16, omega, &p).unwrap();
    let mut c = SolverConfig::new(grid, p, parity);
    c.seed.amplitude = Some(0.8);
    c
}

fn breather() -> &'static BreatherResult {
    static CELL: OnceLock<BreatherResult> = OnceLock::new();
    CELL.get_or_init(|| solve(&config(2.2, Parity::Odd)).unwrap())
}

#[test]
fn converged_result_invariants() {
    let r = breather();
    let c = &r.config;
    assert_eq!(r.status, Status::Converged);
    assert!(r.fp_residual <= c.tol_residual);
    assert!(r.x0_norm > c.tol_zero);
    assert!(r.strong_residual <= 10.0 * c.tol_residual * r.x2_norm);
    assert!(r.parity_deviation <= 1e-12);
    let x = field::synthesize(&r.field);
    let worst_mean = x.time_means().iter().fold(0.0f64, |a, m| a.max(m.abs()));
    assert!(worst_mean <= 1e-13 * r.x0_norm);
    assert!(validation::classical_residual(&r.field, &c.potential) <= 1e-8);
    let trace_last = r.trace.last().unwrap();
    assert_eq!(trace_last.fp_residual, r.fp_residual);
    assert_eq!(trace_last.iter, r.iterations);
}

#[test]
fn newton_from_solution_is_idle() {
    let r = breather();
    let again = newton_solve(&r.config, &r.field).unwrap();
    assert_eq!(again.status, Status::Converged);
    assert!(again.iterations <= 2);
    assert!(again.fp_residual <= r.fp_residual.max(r.config.tol_residual));
}

#[test]
fn newton_from_half_converged_picard() {
    let mut c = config(2.2, Parity::Odd);
    c.strategy = Strategy::Picard;
    c.max_iter = 4;
    let partial = picard_solve(&c).unwrap();
    assert_eq!(partial.status, Status::MaxIter);
    assert!(partial.fp_residual > 1e-6);
    c.max_iter = 500;
    let r = newton_solve(&c, &partial.field).unwrap();
    assert_eq!(r.status, Status::Converged, "{:?}", r.message);
    assert!(r.iterations <= 10);
}

#[test]
fn picard_with_acceleration_alone() {
    let mut c = config(2.2, Parity::Odd);
    c.strategy = Strategy::Picard;
    let r = solve(&c).unwrap();
    // reported, not required: plain acceleration may or may not reach the breather
    assert!(matches!(r.status, Status::Converged | Status::MaxIter | Status::CollapsedToZero));
    if r.converged() {
        assert!((r.x0_norm - breather().x0_norm).abs() < 1e-8);
    }
}

#[test]
fn resonance_inside_band() {
    assert!(matches!(solve(&config(1.5, Parity::Odd)), Err(Error::Resonance { .. })));
}

#[test]
fn harmonic_potential_collapses() {
    let grid = GridSpec::new(32, 4, 16, 2.5).unwrap();
    let mut c = SolverConfig::new(grid, PotentialSpec::HARMONIC, Parity::Odd);
    c.seed.amplitude = Some(1.0);
    assert_eq!(solve(&c).unwrap().status, Status::CollapsedToZero);
    c.strategy = Strategy::Picard;
    assert_eq!(solve(&c).unwrap().status, Status::CollapsedToZero);
}

#[test]
fn runs_are_deterministic() {
    let c = config(2.2, Parity::Even);
    let a = solve(&c).unwrap();
    let b = solve(&c).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.field, b.field);
}

#[test]
fn small_fields_contract() {
    use rand::SeedableRng;
    let omega = 12f64.sqrt();
    let c = config(omega, Parity::Odd);
    let ops = breather_forge::operators::Operators::new(c.grid, c.potential).unwrap();
    let b = validation::bounds_report(omega, 0.0, &c.potential, 0.0).unwrap();
    let w = WeightSpec::uniform();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for k in 1..=20 {
        let x = SpectralField::random(c.grid, &mut rng);
        let target = b.r_crit * k as f64 / 21.0;
        let x = x.scaled(target / field::x0_norm(&x, &w).unwrap());
        let s = ops.apply_s(&x).unwrap();
        assert!(field::x0_norm(&s, &w).unwrap() < field::x0_norm(&x, &w).unwrap());
    }
}

#[test]
fn ring_membership_is_reported() {
    let r = breather();
    let b = r.bounds.expect("pure quartic has bounds");
    assert_eq!(b.x0_norm, r.x0_norm);
    assert!(!b.nonres_ok);
    assert_eq!(b.in_ring, None);
}

#[test]
fn continuation_decreases_toward_band_edge() {
    let mut c = config(2.6, Parity::Odd);
    c.seed.amplitude = Some(1.3);
    let points = continuation_sweep(&c, 2.6, 2.1, 10).unwrap();
    assert_eq!(points.len(), 10);
    let norms: Vec<f64> = points
        .iter()
        .map(|p| {
            assert!(p.converged(), "omega {}", p.omega);
            p.result.as_ref().unwrap().x0_norm
        })
        .collect();
    assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
}

#[test]
fn continuation_oracle_points() {
    // three interior points solved from scratch land on the continued branch
    let mut c = config(2.6, Parity::Odd);
    c.seed.amplitude = Some(1.3);
    let points = continuation_sweep(&c, 2.6, 2.1, 10).unwrap();
    for idx in [2, 5, 8] {
        let p = &points[idx];
        let mut fresh = config(p.omega, Parity::Odd);
        fresh.seed.amplitude = Some(0.75 * ((p.omega * p.omega - 4.0) / 0.84).sqrt());
        let direct = solve(&fresh).unwrap();
        assert_eq!(direct.status, Status::Converged);
        let cont = p.result.as_ref().unwrap();
        assert!((direct.x0_norm - cont.x0_norm).abs() < 1e-9, "omega {}", p.omega);
    }
}

#[test]
fn sweep_across_band_edge() {
    let c = config(2.2, Parity::Odd);
    let points = continuation_sweep(&c, 2.2, 1.8, 5).unwrap();
    assert!(points[0].converged());
    for p in points.iter().filter(|p| p.omega * p.omega <= 4.0) {
        assert!(p.error.as_deref().unwrap().contains("resonance"));
    }
}

#[test]
fn single_step_sweep_is_a_solve() {
    let c = config(2.2, Parity::Odd);
    let points = continuation_sweep(&c, 2.2, 3.0, 1).unwrap();
    assert_eq!(points.len(), 1);
    assert_eq!(points[0].result.as_ref().unwrap().trace, breather().trace);
}

#[test]
fn refinement() {
    let r = breather();
    let same = refine(r, 1).unwrap();
    assert_eq!(same.relative_norm_change, 0.0);
    assert_eq!(same.result.field, r.field);
    let fine = refine(r, 2).unwrap();
    assert_eq!(fine.result.status, Status::Converged);
    assert_eq!(fine.result.field.grid.n_sites, 128);
    assert_eq!(fine.result.field.grid.n_harmonics, 32);
    assert!(fine.relative_norm_change < 1e-8);
}

#[test]
fn default_seed_scaled_by_bounds() {
    let mut c = config(2.2, Parity::Odd);
    c.seed.amplitude = None;
    let seed = initial_field(&c).unwrap();
    let b = validation::bounds_report(2.2, 0.0, &c.potential, 0.0).unwrap();
    assert!(!b.nonres_ok);
    let n = field::x0_norm(&seed, &c.weight).unwrap();
    assert!((n - 0.5 * b.r_max).abs() < 1e-12);
}

#[test]
fn decay_and_norm_comparison() {
    let odd = breather();
    let even = solve(&config(2.2, Parity::Even)).unwrap();
    let fit = validation::decay_rate_fit(odd).unwrap();
    assert!(fit.lambda_eff > 0.0 && fit.r_squared >= 0.999);
    // linear tail rate 2 acosh(Omega / 2)
    assert!((fit.lambda_eff - 2.0 * (1.1f64).acosh()).abs() < 0.01);
    let report = validation::norm_comparison(&even, odd).unwrap();
    assert!(report.even_norm.is_finite() && report.odd_norm.is_finite());
    assert_eq!(validation::norm_comparison(odd, odd).unwrap().difference, 0.0);

    let mut failed = odd.clone();
    failed.status = Status::MaxIter;
    assert!(matches!(validation::norm_comparison(&even, &failed), Err(Error::NotConverged(_))));
}
