//! Fixed-point solvers for `x = S(x)`: damped Picard iteration with Anderson
//! mixing, matrix-free Newton, and the hybrid of both.

pub mod krylov;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{self, GridSpec, Parity, SpectralField, WeightSpec};
use crate::lattice::PotentialSpec;
use crate::operators::Operators;
use crate::validation::{self, BoundsReport, DecayFit};
use krylov::{gmres, norm, Anderson};

/// Picard hands over to Newton once the relative residual drops below this.
pub const NEWTON_SWITCH: f64 = 1e-4;
/// Iterate norm beyond which a run counts as diverged.
pub const DIVERGENCE_NORM: f64 = 1e6;
/// Picard iterations without a new best residual before switching to Newton.
pub const STAGNATION_WINDOW: usize = 30;
/// Relative finite-difference step for directional derivatives of `S`.
pub const FD_STEP: f64 = 1e-6;
/// Relative tolerance of the inner linear solve.
pub const LINEAR_TOL: f64 = 1e-3;
pub const LINEAR_MAX_ITER: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Picard,
    Newton,
    Hybrid,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Picard => "picard",
            Strategy::Newton => "newton",
            Strategy::Hybrid => "hybrid",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "picard" => Ok(Strategy::Picard),
            "newton" => Ok(Strategy::Newton),
            "hybrid" => Ok(Strategy::Hybrid),
            other => Err(format!("unknown strategy `{other}` (expected picard|newton|hybrid)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    CollapsedToZero,
    Diverged,
    MaxIter,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Converged => "converged",
            Status::CollapsedToZero => "collapsed_to_zero",
            Status::Diverged => "diverged",
            Status::MaxIter => "max_iter",
        })
    }
}

/// Initial profile `amplitude (-1)^n sech(width (n - n_c)) cos(Omega t)`.
///
/// Without an amplitude the seed is scaled to a norm inside the existence ring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub amplitude: Option<f64>,
    pub width: f64,
}

impl Default for SeedSpec {
    fn default() -> Self {
        Self {
            amplitude: None,
            width: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub grid: GridSpec,
    pub weight: WeightSpec,
    pub potential: PotentialSpec,
    pub parity: Parity,
    pub strategy: Strategy,
    pub damping: f64,
    pub accel_depth: usize,
    pub tol_residual: f64,
    pub tol_zero: f64,
    pub max_iter: usize,
    pub seed: SeedSpec,
}

impl SolverConfig {
    /// Defaults: hybrid strategy, damping 0.5, depth 5, `lambda = 0`.
    pub fn new(grid: GridSpec, potential: PotentialSpec, parity: Parity) -> Self {
        Self {
            grid,
            weight: WeightSpec::for_parity(0.0, parity),
            potential,
            parity,
            strategy: Strategy::Hybrid,
            damping: 0.5,
            accel_depth: 5,
            tol_residual: 1e-10,
            tol_zero: 1e-8,
            max_iter: 500,
            seed: SeedSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad(format!("damping must lie in (0, 1], got {}", self.damping));
        }
        if !(self.tol_residual > 0.0) || !(self.tol_zero > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if !(self.weight.lambda >= 0.0) {
            return bad(format!("lambda must be >= 0, got {}", self.weight.lambda));
        }
        if !(self.seed.width > 0.0) {
            return bad(format!("seed width must be positive, got {}", self.seed.width));
        }
        if let Some(a) = self.seed.amplitude {
            if !a.is_finite() {
                return bad("seed amplitude must be finite".into());
            }
        }
        if self.max_iter == 0 {
            return bad("max_iter must be >= 1".into());
        }
        self.weight.weights(self.grid.n_sites)?;
        Ok(())
    }

    pub fn with_omega(&self, omega: f64) -> Self {
        Self {
            grid: self.grid.with_omega(omega),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub fp_residual: f64,
    pub x0_norm: f64,
}

#[derive(Debug, Clone)]
pub struct BreatherResult {
    pub field: SpectralField,
    pub omega: f64,
    pub parity: Parity,
    /// Number of updates applied to the seed.
    pub iterations: usize,
    /// `||x - S(x)|| / ||x||` in the configured weighted norm.
    pub fp_residual: f64,
    /// `||M x - N x||` in the configured weighted norm.
    pub strong_residual: f64,
    pub x0_norm: f64,
    pub x2_norm: f64,
    /// `||x - P x|| / ||x||` for the parity projector `P`.
    pub parity_deviation: f64,
    pub decay_fit: Option<DecayFit>,
    pub bounds: Option<BoundsReport>,
    pub status: Status,
    pub trace: Vec<TraceRecord>,
    pub message: Option<String>,
    pub config: SolverConfig,
}

impl BreatherResult {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }

    pub fn lambda_eff(&self) -> Option<f64> {
        self.decay_fit.map(|d| d.lambda_eff)
    }
}

/// Restricts to real (cosine) coefficients. This removes the time-shift
/// family of solutions, so the Newton Jacobian is nonsingular.
pub fn pin_phase(field: &SpectralField) -> SpectralField {
    let mut out = field.clone();
    out.coeffs.iter_mut().for_each(|c| c.im = 0.0);
    out
}

fn real_parts(field: &SpectralField) -> Vec<f64> {
    field.coeffs.iter().map(|c| c.re).collect()
}

fn from_real_parts(grid: GridSpec, v: &[f64]) -> SpectralField {
    let mut f = SpectralField::zeros(grid);
    f.coeffs.iter_mut().zip(v).for_each(|(c, &r)| c.re = r);
    f
}

/// Seed field for `config`.
pub fn initial_field(config: &SolverConfig) -> Result<SpectralField> {
    let (grid, parity, width) = (config.grid, config.parity, config.seed.width);
    if let Some(a) = config.seed.amplitude {
        return Ok(pin_phase(&field::seed_field(grid, parity, a, width)));
    }
    let unit = field::seed_field(grid, parity, 1.0, width);
    let unit_norm = field::x0_norm(&unit, &config.weight)?;
    let target = match validation::bounds_report(grid.omega, config.weight.lambda, &config.potential, 0.0) {
        Ok(b) if b.nonres_ok => 0.5 * (b.r_crit + b.r_max),
        Ok(b) if b.r_max.is_finite() && b.r_max > 0.0 => 0.5 * b.r_max,
        _ => return Ok(pin_phase(&unit.scaled(0.5))),
    };
    if unit_norm == 0.0 {
        return Ok(unit);
    }
    Ok(pin_phase(&unit.scaled(target / unit_norm)))
}

enum PhaseEnd {
    Converged,
    Collapsed,
    Diverged,
    MaxIter(Option<String>),
    Handover(String),
}

struct Run<'a> {
    ops: Operators,
    config: &'a SolverConfig,
    trace: Vec<TraceRecord>,
    updates: usize,
}

struct Eval {
    s: SpectralField,
    fp: f64,
    norm: f64,
}

impl<'a> Run<'a> {
    fn new(config: &'a SolverConfig) -> Result<Self> {
        config.validate()?;
        let ops = Operators::new(config.grid, config.potential)?;
        ops.check_nonresonant()?;
        Ok(Self {
            ops,
            config,
            trace: Vec::new(),
            updates: 0,
        })
    }

    fn norm(&self, f: &SpectralField) -> f64 {
        field::x0_norm(f, &self.config.weight).unwrap_or(f64::NAN)
    }

    fn eval(&self, x: &SpectralField) -> Result<Eval> {
        let s = self.ops.apply_s(x)?;
        let norm = self.norm(x);
        let diff = self.norm(&x.sub(&s));
        let fp = if norm > 0.0 { diff / norm } else { 0.0 };
        Ok(Eval { s, fp, norm })
    }

    fn record(&mut self, e: &Eval) {
        self.trace.push(TraceRecord {
            iter: self.updates,
            fp_residual: e.fp,
            x0_norm: e.norm,
        });
    }

    /// Common termination tests on an evaluated iterate.
    fn classify(&self, e: &Eval) -> Option<PhaseEnd> {
        if !e.norm.is_finite() || !e.fp.is_finite() || e.norm > DIVERGENCE_NORM {
            Some(PhaseEnd::Diverged)
        } else if e.norm < self.config.tol_zero {
            Some(PhaseEnd::Collapsed)
        } else if e.fp <= self.config.tol_residual {
            Some(PhaseEnd::Converged)
        } else {
            None
        }
    }

    fn project(&self, f: &SpectralField) -> SpectralField {
        pin_phase(&field::project(f, self.config.parity))
    }

    /// Damped, optionally accelerated Picard iteration. With `handover` set,
    /// stops early once Newton is likely to do better and returns the best
    /// nontrivial iterate seen.
    fn picard(&mut self, mut x: SpectralField, budget: usize, handover: bool) -> Result<(SpectralField, PhaseEnd)> {
        let theta = self.config.damping;
        let floor = 1e3 * self.config.tol_zero;
        let mut accel = Anderson::new(self.config.accel_depth);
        let mut best: Option<(SpectralField, f64, usize)> = None;
        let start = self.updates;
        loop {
            let e = self.eval(&x)?;
            self.record(&e);
            if let Some(end) = self.classify(&e) {
                let give_back = matches!(end, PhaseEnd::Collapsed | PhaseEnd::Diverged);
                if handover && give_back {
                    if let Some((b, _, _)) = best {
                        let why = format!("picard {} at iteration {}", status_word(&end), self.updates);
                        return Ok((b, PhaseEnd::Handover(why)));
                    }
                }
                return Ok((x, end));
            }
            if e.norm > floor && best.as_ref().map_or(true, |b| e.fp < b.1) {
                best = Some((x.clone(), e.fp, self.updates));
            }
            if handover {
                if e.fp < NEWTON_SWITCH {
                    return Ok((x, PhaseEnd::Handover("residual below switch threshold".into())));
                }
                if let Some((b, _, at)) = &best {
                    if self.updates - at >= STAGNATION_WINDOW {
                        let why = format!("picard stagnated at iteration {}", self.updates);
                        return Ok((b.clone(), PhaseEnd::Handover(why)));
                    }
                }
            }
            if self.updates - start >= budget {
                return Ok((x, PhaseEnd::MaxIter(None)));
            }
            let g = x.axpy(theta, &e.s.sub(&x));
            let next = accel.step(&x.to_real_vec(), &g.to_real_vec());
            x = self.project(&SpectralField::from_real_vec(x.grid, &next));
            self.updates += 1;
        }
    }

    fn residual_vec(&self, x: &SpectralField) -> Result<Vec<f64>> {
        Ok(real_parts(&x.sub(&self.ops.apply_s(x)?)))
    }

    /// Newton on `F(x) = x - S(x)` over real coefficients.
    fn newton(&mut self, mut x: SpectralField, budget: usize) -> Result<(SpectralField, PhaseEnd)> {
        x = self.project(&x);
        let grid = x.grid;
        let start = self.updates;
        loop {
            let e = self.eval(&x)?;
            self.record(&e);
            if let Some(end) = self.classify(&e) {
                return Ok((x, end));
            }
            if self.updates - start >= budget {
                return Ok((x, PhaseEnd::MaxIter(None)));
            }

            let xv = real_parts(&x);
            let f = real_parts(&x.sub(&e.s));
            let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
            let xnorm = norm(&xv);
            let mut failure = None;
            let lin = gmres(
                |v| {
                    let vn = norm(v);
                    if vn == 0.0 {
                        return vec![0.0; v.len()];
                    }
                    let h = FD_STEP * xnorm.max(1.0) / vn;
                    let plus: Vec<f64> = xv.iter().zip(v).map(|(a, b)| a + h * b).collect();
                    let minus: Vec<f64> = xv.iter().zip(v).map(|(a, b)| a - h * b).collect();
                    let sp = self.ops.apply_s(&from_real_parts(grid, &plus));
                    let sm = self.ops.apply_s(&from_real_parts(grid, &minus));
                    match (sp, sm) {
                        (Ok(sp), Ok(sm)) => v
                            .iter()
                            .zip(real_parts(&sp).iter().zip(real_parts(&sm)))
                            .map(|(vi, (p, m))| vi - (p - m) / (2.0 * h))
                            .collect(),
                        (Err(err), _) | (_, Err(err)) => {
                            failure.get_or_insert(err);
                            vec![0.0; v.len()]
                        }
                    }
                },
                &rhs,
                LINEAR_TOL,
                LINEAR_MAX_ITER,
            );
            if let Some(err) = failure {
                return Err(err);
            }

            // backtracking on the relative residual
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..12 {
                let trial: Vec<f64> = xv.iter().zip(&lin.x).map(|(a, d)| a + t * d).collect();
                let xt = self.project(&from_real_parts(grid, &trial));
                let nt = self.norm(&xt);
                let rel = if nt > 0.0 {
                    norm(&self.residual_vec(&xt)?) / nt
                } else {
                    0.0
                };
                if rel.is_finite() && rel < (1.0 - 1e-4 * t) * norm(&f) / xnorm {
                    accepted = Some(xt);
                    break;
                }
                t *= 0.5;
            }
            match accepted {
                Some(xt) => {
                    x = xt;
                    self.updates += 1;
                }
                None => {
                    let msg = format!(
                        "line search failed at iteration {} (linear solve: {} steps, relative residual {:.3e})",
                        self.updates, lin.iterations, lin.rel_residual
                    );
                    return Ok((x, PhaseEnd::MaxIter(Some(msg))));
                }
            }
        }
    }

    fn finish(self, x: SpectralField, end: PhaseEnd, note: Option<String>) -> Result<BreatherResult> {
        let config = self.config;
        let weight = &config.weight;
        let e = self.eval(&x)?;
        let status = match end {
            PhaseEnd::Converged => Status::Converged,
            PhaseEnd::Collapsed => Status::CollapsedToZero,
            PhaseEnd::Diverged => Status::Diverged,
            PhaseEnd::MaxIter(_) | PhaseEnd::Handover(_) => Status::MaxIter,
        };
        let mut message = note;
        if let PhaseEnd::MaxIter(Some(m)) | PhaseEnd::Handover(m) = end {
            message = Some(match message {
                Some(prev) => format!("{prev}; {m}"),
                None => m,
            });
        }
        let finite = x.is_finite();
        let strong = if finite {
            field::x0_norm(&self.ops.strong_residual_field(&x), weight)?
        } else {
            f64::NAN
        };
        let x2 = if finite { field::x2_norm(&x, weight)? } else { f64::NAN };
        let parity_deviation = if e.norm > 0.0 {
            field::x0_norm(&x.sub(&field::project(&x, config.parity)), weight)? / e.norm
        } else {
            0.0
        };
        let decay_fit = if status == Status::Converged {
            validation::decay_fit_field(&x, config.parity).ok()
        } else {
            None
        };
        let bounds = validation::bounds_report(x.grid.omega, weight.lambda, &config.potential, e.norm).ok();
        Ok(BreatherResult {
            omega: x.grid.omega,
            parity: config.parity,
            iterations: self.updates,
            fp_residual: e.fp,
            strong_residual: strong,
            x0_norm: e.norm,
            x2_norm: x2,
            parity_deviation,
            decay_fit,
            bounds,
            status,
            trace: self.trace,
            message,
            config: config.clone(),
            field: x,
        })
    }
}

fn status_word(end: &PhaseEnd) -> &'static str {
    match end {
        PhaseEnd::Collapsed => "collapsed",
        PhaseEnd::Diverged => "diverged",
        _ => "stopped",
    }
}

fn check_initial(config: &SolverConfig, initial: &SpectralField) -> Result<()> {
    if initial.grid.n_sites != config.grid.n_sites || initial.grid.n_harmonics != config.grid.n_harmonics {
        return Err(Error::LengthMismatch(format!(
            "initial field is {}x{}, config grid is {}x{}",
            initial.grid.n_sites, initial.grid.n_harmonics, config.grid.n_sites, config.grid.n_harmonics
        )));
    }
    Ok(())
}

/// Damped Picard iteration from the configured seed.
pub fn picard_solve(config: &SolverConfig) -> Result<BreatherResult> {
    let mut run = Run::new(config)?;
    let x = run.project(&initial_field(config)?);
    let (x, end) = run.picard(x, config.max_iter, false)?;
    run.finish(x, end, None)
}

/// Newton iteration from `initial`.
pub fn newton_solve(config: &SolverConfig, initial: &SpectralField) -> Result<BreatherResult> {
    check_initial(config, initial)?;
    let mut run = Run::new(config)?;
    let x0 = initial.with_omega(config.grid.omega);
    let (x, end) = run.newton(x0, config.max_iter)?;
    run.finish(x, end, None)
}

/// Picard until close enough (or stuck), then Newton from the best iterate.
pub fn hybrid_solve(config: &SolverConfig, initial: &SpectralField) -> Result<BreatherResult> {
    check_initial(config, initial)?;
    let mut run = Run::new(config)?;
    let x0 = run.project(&initial.with_omega(config.grid.omega));
    let (x, end) = run.picard(x0, config.max_iter, true)?;
    match end {
        PhaseEnd::Handover(why) => {
            let budget = config.max_iter.saturating_sub(run.updates);
            let (x, end) = run.newton(x, budget)?;
            run.finish(x, end, Some(format!("newton after {why}")))
        }
        other => run.finish(x, other, None),
    }
}

/// Solves from the configured seed with the configured strategy.
pub fn solve(config: &SolverConfig) -> Result<BreatherResult> {
    match config.strategy {
        Strategy::Picard => picard_solve(config),
        _ => {
            config.validate()?;
            let seed = initial_field(config)?;
            solve_from(config, &seed)
        }
    }
}

/// Solves from an explicit initial field with the configured strategy.
pub fn solve_from(config: &SolverConfig, initial: &SpectralField) -> Result<BreatherResult> {
    match config.strategy {
        Strategy::Picard => {
            check_initial(config, initial)?;
            let mut run = Run::new(config)?;
            let x0 = run.project(&initial.with_omega(config.grid.omega));
            let (x, end) = run.picard(x0, config.max_iter, false)?;
            run.finish(x, end, None)
        }
        Strategy::Newton => newton_solve(config, initial),
        Strategy::Hybrid => hybrid_solve(config, initial),
    }
}

/// One frequency of a continuation sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub omega: f64,
    pub result: Option<BreatherResult>,
    pub error: Option<String>,
    pub bisected: bool,
}

impl SweepPoint {
    pub fn converged(&self) -> bool {
        self.result.as_ref().is_some_and(|r| r.converged())
    }
}

/// `steps` equally spaced frequencies from `omega_from` to `omega_to`, each
/// seeded from the last converged solution.
pub fn continuation_sweep(config: &SolverConfig, omega_from: f64, omega_to: f64, steps: usize) -> Result<Vec<SweepPoint>> {
    if steps == 0 {
        return Err(Error::InvalidParameter("sweep needs at least one step".into()));
    }
    let omegas: Vec<f64> = if steps == 1 {
        vec![omega_from]
    } else {
        (0..steps)
            .map(|i| omega_from + (omega_to - omega_from) * i as f64 / (steps - 1) as f64)
            .collect()
    };
    let mut points = Vec::with_capacity(steps);
    let mut prev: Option<BreatherResult> = None;
    for omega in omegas {
        let cfg = config.with_omega(omega);
        let attempt = match &prev {
            Some(p) => solve_from(&cfg, &p.field),
            None => solve(&cfg),
        };
        let mut point = SweepPoint {
            omega,
            result: None,
            error: None,
            bisected: false,
        };
        match attempt {
            Err(e) => point.error = Some(e.to_string()),
            Ok(r) if r.converged() => point.result = Some(r),
            Ok(r) => {
                point.result = Some(r);
                if let Some(p) = &prev {
                    point.bisected = true;
                    let mid = config.with_omega(0.5 * (p.omega + omega));
                    if let Ok(m) = solve_from(&mid, &p.field) {
                        if m.converged() {
                            match solve_from(&cfg, &m.field) {
                                Ok(r2) => point.result = Some(r2),
                                Err(e) => point.error = Some(e.to_string()),
                            }
                        }
                    }
                }
            }
        }
        if let Some(r) = point.result.as_ref().filter(|r| r.converged()) {
            prev = Some(r.clone());
        }
        points.push(point);
    }
    Ok(points)
}

#[derive(Debug, Clone)]
pub struct Refinement {
    pub result: BreatherResult,
    /// `|norm_fine - norm_coarse| / norm_coarse` in the configured norm.
    pub relative_norm_change: f64,
}

/// Re-solves on a grid with `factor` times the sites and harmonics, starting
/// from the zero-padded solution.
pub fn refine(result: &BreatherResult, factor: usize) -> Result<Refinement> {
    if factor == 0 {
        return Err(Error::InvalidParameter("refinement factor must be >= 1".into()));
    }
    if !result.converged() {
        return Err(Error::NotConverged(format!("cannot refine a {} result", result.status)));
    }
    if factor == 1 {
        return Ok(Refinement {
            result: result.clone(),
            relative_norm_change: 0.0,
        });
    }
    let g = result.field.grid;
    let fine = GridSpec::for_potential(g.n_sites * factor, g.n_harmonics * factor, g.omega, &result.config.potential)?;
    let fine = GridSpec {
        n_time_samples: fine.n_time_samples.max(g.n_time_samples * factor),
        ..fine
    };
    let mut cfg = result.config.clone();
    cfg.grid = fine;
    let start = result.field.interpolate(fine)?;
    let refined = newton_solve(&cfg, &start)?;
    let change = (refined.x0_norm - result.x0_norm).abs() / result.x0_norm;
    Ok(Refinement {
        result: refined,
        relative_norm_change: change,
    })
}
