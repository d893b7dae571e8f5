//! Velocity-Verlet integration of the canonical equations
//! `x' = 2y_n - y_{n+1} - y_{n-1}`, `y' = -V'(x_n)` on the ring.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SpectralField, Transforms};
use crate::lattice::PotentialSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    /// Largest `|H(kT) - H(0)| / |H(0)|` over whole periods.
    pub energy_drift: f64,
    /// Largest relative energy deviation over all steps.
    pub energy_oscillation: f64,
    /// Largest `|P(t) - P(0)|` over all steps.
    pub momentum_drift: f64,
    /// Relative l2 distance of `(x, y)` after one period from the initial state.
    pub period_return_error: f64,
    /// Same after the last integrated period.
    pub final_return_error: f64,
    pub periods_integrated: usize,
    pub steps_per_period: usize,
    pub dt: f64,
}

/// Phase-space point in ring storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// `(x(0), y(0))` of a spectral solution; `y` solves `x'(0) = L y` with its
/// uniform mode set to zero.
pub fn initial_state(field: &SpectralField) -> CanonicalState {
    let grid = field.grid;
    let mut x = vec![0.0; grid.n_sites];
    let mut xdot = vec![0.0; grid.n_sites];
    for (i, (xi, vi)) in x.iter_mut().zip(xdot.iter_mut()).enumerate() {
        for (m, c) in field.site_coeffs(i).iter().enumerate() {
            let freq = grid.omega * (m + 1) as f64;
            *xi += 2.0 * c.re;
            // d/dt of 2 Re(c e^{i w t}) at t = 0 is -2 w Im(c)
            *vi -= 2.0 * freq * c.im;
        }
    }
    let y = Transforms::new(grid.n_sites, 2 * grid.n_harmonics + 1).solve_neg_laplacian(&xdot);
    CanonicalState { x, y }
}

/// `L y = 2 y_n - y_{n+1} - y_{n-1}` on the ring.
pub fn neg_laplacian(y: &[f64], out: &mut [f64]) {
    let n = y.len();
    for i in 0..n {
        out[i] = 2.0 * y[i] - y[(i + 1) % n] - y[(i + n - 1) % n];
    }
}

pub fn ring_energy(state: &CanonicalState, potential: &PotentialSpec) -> f64 {
    let n = state.x.len();
    (0..n)
        .map(|i| {
            let dy = state.y[i] - state.y[(i + 1) % n];
            0.5 * dy * dy + potential.v(state.x[i])
        })
        .sum()
}

pub fn ring_momentum(state: &CanonicalState) -> f64 {
    let n = state.y.len();
    (0..n).map(|i| state.y[i] - state.y[(i + 1) % n]).sum()
}

/// Advances `state` by `steps` velocity-Verlet steps of size `dt`.
pub fn verlet_steps(
    state: &mut CanonicalState,
    potential: &PotentialSpec,
    dt: f64,
    steps: usize,
    mut observe: impl FnMut(&CanonicalState),
) {
    let n = state.x.len();
    let mut ly = vec![0.0; n];
    for _ in 0..steps {
        for (y, x) in state.y.iter_mut().zip(&state.x) {
            *y -= 0.5 * dt * potential.v_prime(*x);
        }
        neg_laplacian(&state.y, &mut ly);
        for (x, d) in state.x.iter_mut().zip(&ly) {
            *x += dt * d;
        }
        for (y, x) in state.y.iter_mut().zip(&state.x) {
            *y -= 0.5 * dt * potential.v_prime(*x);
        }
        observe(state);
    }
}

fn relative_distance(a: &CanonicalState, b: &CanonicalState) -> f64 {
    let diff: f64 = a
        .x
        .iter()
        .zip(&b.x)
        .chain(a.y.iter().zip(&b.y))
        .map(|(u, v)| (u - v).powi(2))
        .sum();
    let size: f64 = b.x.iter().chain(&b.y).map(|v| v * v).sum();
    if size > 0.0 {
        (diff / size).sqrt()
    } else {
        diff.sqrt()
    }
}

/// Integrates a spectral solution over `periods` periods of `2 pi / Omega`.
pub fn integrate_trajectory(
    field: &SpectralField,
    potential: &PotentialSpec,
    periods: usize,
    steps_per_period: usize,
) -> Result<TrajectoryReport> {
    if steps_per_period < 64 {
        return Err(Error::InvalidParameter(format!(
            "steps_per_period must be >= 64, got {steps_per_period}"
        )));
    }
    if periods == 0 {
        return Err(Error::InvalidParameter("periods must be >= 1".into()));
    }
    let dt = field.grid.period() / steps_per_period as f64;
    let start = initial_state(field);
    let e0 = ring_energy(&start, potential);
    let p0 = ring_momentum(&start);
    let e_scale = if e0.abs() > 0.0 { e0.abs() } else { 1.0 };

    let mut state = start.clone();
    let mut energy_oscillation: f64 = 0.0;
    let mut momentum_drift: f64 = 0.0;
    let mut energy_drift: f64 = 0.0;
    let mut period_return_error = 0.0;
    let mut finite = true;
    for k in 0..periods {
        verlet_steps(&mut state, potential, dt, steps_per_period, |s| {
            let e = ring_energy(s, potential);
            finite &= e.is_finite();
            energy_oscillation = energy_oscillation.max((e - e0).abs() / e_scale);
            momentum_drift = momentum_drift.max((ring_momentum(s) - p0).abs());
        });
        if !finite {
            return Err(Error::BlowUp {
                step: (k + 1) * steps_per_period,
            });
        }
        energy_drift = energy_drift.max((ring_energy(&state, potential) - e0).abs() / e_scale);
        if k == 0 {
            period_return_error = relative_distance(&state, &start);
        }
    }

    Ok(TrajectoryReport {
        energy_drift,
        energy_oscillation,
        momentum_drift,
        period_return_error,
        final_return_error: relative_distance(&state, &start),
        periods_integrated: periods,
        steps_per_period,
        dt,
    })
}
