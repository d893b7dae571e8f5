//! Pointwise and norm-based checks on computed solutions.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::{self, Parity, SpectralField, Transforms, WeightSpec};
use crate::lattice::PotentialSpec;
use crate::operators::{nonlinear_stencil, Operators};

/// `||M u - N u||_{X0}` with uniform weight.
pub fn strong_residual(field: &SpectralField, potential: &PotentialSpec) -> Result<f64> {
    strong_residual_weighted(field, potential, &WeightSpec::uniform())
}

pub fn strong_residual_weighted(
    field: &SpectralField,
    potential: &PotentialSpec,
    weight: &WeightSpec,
) -> Result<f64> {
    let ops = Operators::new(field.grid, *potential)?;
    field::x0_norm(&ops.strong_residual_field(field), weight)
}

/// Largest pointwise mismatch between the spectrally reconstructed second time
/// derivative and `Delta x + Delta W'(x)` on the collocation grid, relative to
/// the largest `|x''|`.
pub fn classical_residual(field: &SpectralField, potential: &PotentialSpec) -> f64 {
    let grid = field.grid;
    let tr = Transforms::for_grid(&grid);
    let om2 = grid.omega * grid.omega;
    let mut accel = field.clone();
    for i in 0..grid.n_sites {
        for (m, c) in accel.site_coeffs_mut(i).iter_mut().enumerate() {
            *c *= -om2 * ((m + 1) * (m + 1)) as f64;
        }
    }
    let xdd = tr.synthesize(&accel);
    let x = tr.synthesize(field);
    let nl = nonlinear_stencil(&x, potential);
    let n = grid.n_sites;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let (ip, im) = ((i + 1) % n, (i + n - 1) % n);
        for j in 0..x.n_time {
            let lap = x.get(ip, j) - 2.0 * x.get(i, j) + x.get(im, j);
            worst = worst.max((xdd.get(i, j) - lap - nl.get(i, j)).abs());
        }
    }
    let scale = xdd.max_abs();
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// Largest pointwise violation of the defining symmetry relation on the
/// collocation grid, relative to the peak amplitude.
///
/// Even: `u_n(t) = -u_{-(n+1)}(t)`. Odd: `u_n(t) = -u_{-n}(t + T/2)`.
pub fn parity_relation_error(field: &SpectralField, parity: Parity) -> f64 {
    let grid = field.grid;
    let tr = Transforms::for_grid(&grid);
    let x = tr.synthesize(field);
    let image = match parity {
        Parity::Even => x.clone(),
        Parity::Odd => {
            // half-period shift multiplies harmonic m by (-1)^m
            let mut shifted = field.clone();
            for i in 0..grid.n_sites {
                for (m, c) in shifted.site_coeffs_mut(i).iter_mut().enumerate() {
                    if m % 2 == 0 {
                        *c = -*c;
                    }
                }
            }
            tr.synthesize(&shifted)
        }
    };
    let n = grid.n_sites;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let phys = grid.site(i);
        let partner = match parity {
            Parity::Even => grid.index(-(phys + 1)),
            Parity::Odd => grid.index(-phys),
        };
        for j in 0..x.n_time {
            worst = worst.max((x.get(i, j) + image.get(partner, j)).abs());
        }
    }
    let peak = x.max_abs();
    if peak > 0.0 {
        worst / peak
    } else {
        worst
    }
}

/// Largest per-site time mean of the samples relative to the peak amplitude.
pub fn time_mean_ratio(field: &SpectralField) -> f64 {
    let x = field::synthesize(field);
    let worst = x.time_means().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let peak = x.max_abs();
    if peak > 0.0 {
        worst / peak
    } else {
        worst
    }
}

/// `sum_n exp(lambda |n - c|) a_n^2` by direct summation over a profile in
/// storage order.
pub fn weighted_tail_sum(amplitudes: &[f64], lambda: f64, center: f64) -> f64 {
    let half = (amplitudes.len() / 2) as f64;
    amplitudes
        .iter()
        .enumerate()
        .map(|(i, a)| (lambda * (i as f64 - half - center).abs()).exp() * a * a)
        .sum()
}

/// Weighted norms of an even and an odd solution at the same parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormComparison {
    pub omega: f64,
    pub lambda: f64,
    pub even_norm: f64,
    pub odd_norm: f64,
    /// `even_norm - odd_norm`
    pub difference: f64,
    pub odd_smaller: bool,
}
