use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tail window relative to the peak amplitude, `[lower, upper] * peak`.
pub const TAIL_WINDOW: (f64, f64) = (1e-12, 1e-2);

/// Least-squares fit of `log a_n = intercept - lambda_eff |n - c|` over the tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub lambda_eff: f64,
    pub r_squared: f64,
    pub intercept: f64,
    pub sites_used: usize,
}

impl DecayFit {
    pub fn line(&self, distance: f64) -> f64 {
        self.intercept - self.lambda_eff * distance
    }
}

/// Fits the exponential tail of a site profile given in ring storage order
/// (storage index `i` is site `i - N/2`), measuring distance from `center`.
pub fn fit_profile(amplitudes: &[f64], center: f64) -> Result<DecayFit> {
    let half = (amplitudes.len() / 2) as f64;
    let peak = amplitudes.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let (lo, hi) = (TAIL_WINDOW.0 * peak, TAIL_WINDOW.1 * peak);
    let points: Vec<(f64, f64)> = amplitudes
        .iter()
        .enumerate()
        .filter(|(_, a)| a.abs() >= lo && a.abs() <= hi && a.abs() > 0.0)
        .map(|(i, a)| ((i as f64 - half - center).abs(), a.abs().ln()))
        .collect();
    if points.len() < 4 {
        return Err(Error::InsufficientTail {
            usable: points.len(),
        });
    }

    let n = points.len() as f64;
    let mean_d = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_l = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sdd: f64 = points.iter().map(|p| (p.0 - mean_d).powi(2)).sum();
    let sdl: f64 = points.iter().map(|p| (p.0 - mean_d) * (p.1 - mean_l)).sum();
    let sll: f64 = points.iter().map(|p| (p.1 - mean_l).powi(2)).sum();
    if sdd == 0.0 {
        return Err(Error::InsufficientTail {
            usable: points.len(),
        });
    }
    let slope = sdl / sdd;
    let intercept = mean_l - slope * mean_d;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if sll > 0.0 { 1.0 - ss_res / sll } else { 1.0 };
    Ok(DecayFit {
        lambda_eff: -slope,
        r_squared,
        intercept,
        sites_used: points.len(),
    })
}
