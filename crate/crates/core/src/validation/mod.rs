//! Independent verification of computed breathers.

pub mod bounds;
pub mod checks;
pub mod decay;
pub mod trajectory;

pub use bounds::{bounds_from_growth, bounds_report, coupling_constant, BoundsReport};
pub use checks::{
    classical_residual, parity_relation_error, strong_residual, strong_residual_weighted,
    time_mean_ratio, weighted_tail_sum, NormComparison,
};
pub use decay::{fit_profile, DecayFit, TAIL_WINDOW};
pub use trajectory::{initial_state, integrate_trajectory, CanonicalState, TrajectoryReport};

use crate::error::{Error, Result};
use crate::field::{self, Parity, SpectralField};
use crate::solver::{BreatherResult, Status};

/// `max_t |x_n(t)|` on the collocation grid, in storage order.
pub fn site_profile(field: &SpectralField) -> Vec<f64> {
    field::synthesize(field).max_abs_profile()
}

/// Exponential tail fit of a spectral field about its parity centre.
pub fn decay_fit_field(field: &SpectralField, parity: Parity) -> Result<DecayFit> {
    fit_profile(&site_profile(field), parity.center())
}

/// Tail fit of a converged result.
pub fn decay_rate_fit(result: &BreatherResult) -> Result<DecayFit> {
    require_converged(result)?;
    decay_fit_field(&result.field, result.parity)
}

fn require_converged(result: &BreatherResult) -> Result<()> {
    if result.status != Status::Converged {
        return Err(Error::NotConverged(format!(
            "status {} at omega = {}",
            result.status, result.omega
        )));
    }
    Ok(())
}

/// Compares the weighted norms of an even and an odd solution. Diagnostic only.
pub fn norm_comparison(even: &BreatherResult, odd: &BreatherResult) -> Result<NormComparison> {
    require_converged(even)?;
    require_converged(odd)?;
    let (ce, co) = (&even.config, &odd.config);
    if even.omega != odd.omega || ce.weight.lambda != co.weight.lambda || ce.potential != co.potential {
        return Err(Error::Incompatible(
            "results differ in omega, lambda or potential".into(),
        ));
    }
    Ok(NormComparison {
        omega: even.omega,
        lambda: ce.weight.lambda,
        even_norm: even.x0_norm,
        odd_norm: odd.x0_norm,
        difference: even.x0_norm - odd.x0_norm,
        odd_smaller: odd.x0_norm < even.x0_norm,
    })
}
