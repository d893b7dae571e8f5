#![allow(dead_code)]

//! Test-only oracles that share no code with the library.

use nalgebra::{DMatrix, DVector};

/// How the chain is cut off at its ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    Periodic,
    /// `x = 0` beyond both ends.
    Truncated,
}

/// `x'' = V'(x_{n+1}) + V'(x_{n-1}) - 2 V'(x_n)`, `V'(x) = x + beta x^3`.
fn accel(x: &[f64], beta: f64, boundary: Boundary, out: &mut [f64]) {
    let n = x.len();
    let vp: Vec<f64> = x.iter().map(|&v| v + beta * v * v * v).collect();
    for i in 0..n {
        let (right, left) = match boundary {
            Boundary::Periodic => (vp[(i + 1) % n], vp[(i + n - 1) % n]),
            Boundary::Truncated => (
                if i + 1 < n { vp[i + 1] } else { 0.0 },
                if i > 0 { vp[i - 1] } else { 0.0 },
            ),
        };
        out[i] = right + left - 2.0 * vp[i];
    }
}

/// Classical RK4 over `[0, t_end]` from `(x, v)`.
pub fn rk4_flow(x0: &[f64], v0: &[f64], beta: f64, boundary: Boundary, t_end: f64, steps: usize) -> (Vec<f64>, Vec<f64>) {
    let n = x0.len();
    let h = t_end / steps as f64;
    let (mut x, mut v) = (x0.to_vec(), v0.to_vec());
    let mut a = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let (mut k1x, mut k1v) = (vec![0.0; n], vec![0.0; n]);
    let (mut k2x, mut k2v) = (vec![0.0; n], vec![0.0; n]);
    let (mut k3x, mut k3v) = (vec![0.0; n], vec![0.0; n]);
    let (mut k4x, mut k4v) = (vec![0.0; n], vec![0.0; n]);
    for _ in 0..steps {
        accel(&x, beta, boundary, &mut a);
        k1x.copy_from_slice(&v);
        k1v.copy_from_slice(&a);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k1x[i];
            k2x[i] = v[i] + 0.5 * h * k1v[i];
        }
        accel(&tmp, beta, boundary, &mut k2v);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k2x[i];
            k3x[i] = v[i] + 0.5 * h * k2v[i];
        }
        accel(&tmp, beta, boundary, &mut k3v);
        for i in 0..n {
            tmp[i] = x[i] + h * k3x[i];
            k4x[i] = v[i] + h * k3v[i];
        }
        accel(&tmp, beta, boundary, &mut k4v);
        for i in 0..n {
            x[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            v[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
    }
    (x, v)
}

/// Outcome of the shooting solve.
pub struct ShootingOrbit {
    /// `x_n(0)` for sites `-N/2 .. N/2 - 1`, with `x'(0) = 0`.
    pub x0: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Residual of the time-`T` return map plus the zero-sum constraint.
fn return_residual(x0: &[f64], beta: f64, boundary: Boundary, period: f64, steps: usize) -> Vec<f64> {
    let zero = vec![0.0; x0.len()];
    let (x, v) = rk4_flow(x0, &zero, beta, boundary, period, steps);
    let mut r: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
    r.extend(v);
    if boundary == Boundary::Periodic {
        // the sum of x is conserved on the ring; fix it to the zero-mean value
        r.push(x0.iter().sum());
    }
    r
}

/// Gauss-Newton on the return map `x(0) -> (x(T) - x(0), x'(T))` with
/// `x'(0) = 0`, from the staggered guess `amp (-1)^n sech(kappa n)`.
pub fn shoot_breather(n_sites: usize, boundary: Boundary, beta: f64, omega: f64, amp: f64, kappa: f64, steps: usize) -> ShootingOrbit {
    let period = 2.0 * std::f64::consts::PI / omega;
    let half = (n_sites / 2) as i64;
    let mut x: Vec<f64> = (0..n_sites as i64)
        .map(|i| {
            let n = i - half;
            let s = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            amp * s / (kappa * n as f64).cosh()
        })
        .collect();
    let mut iterations = 0;
    let mut res = return_residual(&x, beta, boundary, period, steps);
    for _ in 0..30 {
        let rn = res.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn < 1e-13 {
            break;
        }
        let m = res.len();
        let mut jac = DMatrix::<f64>::zeros(m, n_sites);
        let h = 1e-6;
        for j in 0..n_sites {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let rp = return_residual(&xp, beta, boundary, period, steps);
            let rm = return_residual(&xm, beta, boundary, period, steps);
            for i in 0..m {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let svd = jac.svd(true, true);
        let step = svd
            .solve(&DVector::from_vec(res.clone()), 1e-10)
            .expect("svd solve");
        for (xi, d) in x.iter_mut().zip(step.iter()) {
            *xi -= d;
        }
        iterations += 1;
        res = return_residual(&x, beta, boundary, period, steps);
    }
    ShootingOrbit {
        residual: res.iter().map(|v| v * v).sum::<f64>().sqrt(),
        x0: x,
        iterations,
    }
}

/// Relative l2 distance, minimised over a global sign.
pub fn rel_l2_up_to_sign(a: &[f64], b: &[f64]) -> f64 {
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let plus = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let minus = a.iter().zip(b).map(|(x, y)| (x + y).powi(2)).sum::<f64>().sqrt();
    plus.min(minus) / nb
}
