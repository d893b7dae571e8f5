use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::{GrowthBound, PotentialSpec};

/// Existence radius, contraction radius and frequency conditions for one
/// `(Omega, lambda, potential)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub omega: f64,
    pub lambda: f64,
    pub kbar: f64,
    pub growth_alpha: f64,
    /// `((Omega^2 - 4) / (kbar sqrt(2 (1 + cosh lambda))))^(1/alpha)`
    pub r_max: f64,
    /// Same base raised to `1/(1 + alpha)`.
    pub r_crit: f64,
    /// `Omega^2 > 4`
    pub nonres0_ok: bool,
    /// `Omega^2 > 4 + kbar sqrt(2 (1 + cosh lambda))`
    pub nonres_ok: bool,
    /// `r_crit <= x0_norm <= r_max`, only evaluated when `nonres_ok`.
    pub in_ring: Option<bool>,
    pub x0_norm: f64,
}

/// `kbar sqrt(2 (1 + cosh lambda))`
pub fn coupling_constant(kbar: f64, lambda: f64) -> f64 {
    kbar * (2.0 * (1.0 + lambda.cosh())).sqrt()
}

/// Bounds from explicit growth constants.
pub fn bounds_from_growth(omega: f64, lambda: f64, growth: GrowthBound, x0_norm: f64) -> BoundsReport {
    let omega_sq = omega * omega;
    let c = coupling_constant(growth.kbar, lambda);
    let base = (omega_sq - 4.0) / c;
    let r_max = base.powf(1.0 / growth.alpha);
    let r_crit = base.powf(1.0 / (1.0 + growth.alpha));
    let nonres0_ok = omega_sq > 4.0;
    let nonres_ok = omega_sq > 4.0 + c;
    let in_ring = nonres_ok.then(|| r_crit <= x0_norm && x0_norm <= r_max);
    BoundsReport {
        omega,
        lambda,
        kbar: growth.kbar,
        growth_alpha: growth.alpha,
        r_max,
        r_crit,
        nonres0_ok,
        nonres_ok,
        in_ring,
        x0_norm,
    }
}

/// Bounds for a pure cubic or pure quartic potential.
pub fn bounds_report(omega: f64, lambda: f64, potential: &PotentialSpec, x0_norm: f64) -> Result<BoundsReport> {
    Ok(bounds_from_growth(omega, lambda, potential.growth_bound()?, x0_norm))
}
