//! Interaction potential, phonon dispersion and the change between physical
//! displacement/momentum variables and relative (bond strain) variables.
//!
//! The potential is `V(x) = x^2/2 + W(x)` with `W(x) = a x^3/3 + b x^4/4`, so
//! `V''(0) = 1` and the linear band is `4 sin^2(k/2)`.
//!
//! All sequences here live on an open finite lattice of `N` sites; the left
//! edge stands in for `n -> -inf` (displacement and `y` are anchored to zero
//! there).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Polynomial interaction potential `V(x) = x^2/2 + cubic x^3/3 + quartic x^4/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub cubic: f64,
    pub quartic: f64,
}

/// Values of `V`, `W` and their first two derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialValues {
    pub v: f64,
    pub vp: f64,
    pub vpp: f64,
    pub w: f64,
    pub wp: f64,
    pub wpp: f64,
}

/// Constants of the growth envelope `|W''(x)| <= kbar |x|^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthBound {
    pub kbar: f64,
    pub alpha: f64,
}

impl PotentialSpec {
    pub const HARMONIC: PotentialSpec = PotentialSpec {
        cubic: 0.0,
        quartic: 0.0,
    };

    pub fn new(cubic: f64, quartic: f64) -> Self {
        Self { cubic, quartic }
    }

    pub fn alpha_fput(cubic: f64) -> Self {
        Self { cubic, quartic: 0.0 }
    }

    pub fn beta_fput(quartic: f64) -> Self {
        Self { cubic: 0.0, quartic }
    }

    pub fn is_harmonic(&self) -> bool {
        self.cubic == 0.0 && self.quartic == 0.0
    }

    /// Polynomial degree of `W'` (1 when `W` vanishes, so `V'` is linear).
    pub fn nonlinearity_degree(&self) -> usize {
        if self.quartic != 0.0 {
            3
        } else if self.cubic != 0.0 {
            2
        } else {
            1
        }
    }

    /// `W'` is odd, so `x -> -x` maps solutions to solutions.
    pub fn is_odd_symmetric(&self) -> bool {
        self.cubic == 0.0
    }

    #[inline]
    pub fn w(&self, x: f64) -> f64 {
        let x2 = x * x;
        x2 * x * (self.cubic / 3.0 + self.quartic * x / 4.0)
    }

    #[inline]
    pub fn w_prime(&self, x: f64) -> f64 {
        x * x * (self.cubic + self.quartic * x)
    }

    #[inline]
    pub fn w_second(&self, x: f64) -> f64 {
        x * (2.0 * self.cubic + 3.0 * self.quartic * x)
    }

    #[inline]
    pub fn v(&self, x: f64) -> f64 {
        0.5 * x * x + self.w(x)
    }

    #[inline]
    pub fn v_prime(&self, x: f64) -> f64 {
        x + self.w_prime(x)
    }

    pub fn eval(&self, x: f64) -> PotentialValues {
        let w = self.w(x);
        let wp = self.w_prime(x);
        let wpp = self.w_second(x);
        PotentialValues {
            v: 0.5 * x * x + w,
            vp: x + wp,
            vpp: 1.0 + wpp,
            w,
            wp,
            wpp,
        }
    }

    /// Global growth constants for a pure cubic or pure quartic `W`.
    ///
    /// Mixed and harmonic potentials have no single global pair; see
    /// [`PotentialSpec::local_growth_bound`].
    pub fn growth_bound(&self) -> Result<GrowthBound> {
        match (self.cubic != 0.0, self.quartic != 0.0) {
            (true, false) => Ok(GrowthBound {
                kbar: 2.0 * self.cubic.abs(),
                alpha: 1.0,
            }),
            (false, true) => Ok(GrowthBound {
                kbar: 3.0 * self.quartic.abs(),
                alpha: 2.0,
            }),
            _ => Err(Error::NoGlobalGrowthBound {
                cubic: self.cubic,
                quartic: self.quartic,
            }),
        }
    }

    /// `sup_{0 < |x| <= cap} |W''(x)| / |x|^alpha`, maximised on a dense grid.
    pub fn local_growth_bound(&self, cap: f64, alpha: f64) -> Result<GrowthBound> {
        if !(cap > 0.0 && cap.is_finite()) || !(alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "local growth bound needs cap > 0 and alpha >= 0 (cap = {cap}, alpha = {alpha})"
            )));
        }
        const SAMPLES: usize = 200_000;
        let mut kbar: f64 = 0.0;
        for i in 1..=SAMPLES {
            let x = cap * i as f64 / SAMPLES as f64;
            for s in [x, -x] {
                kbar = kbar.max(self.w_second(s).abs() / s.abs().powf(alpha));
            }
        }
        Ok(GrowthBound { kbar, alpha })
    }
}

/// Squared phonon frequency `4 sin^2(k/2)`.
pub fn dispersion(k: f64) -> f64 {
    let s = (0.5 * k).sin();
    4.0 * s * s
}

/// Displacements and momenta of the original chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    /// `c+ - c-`, the net lattice deformation `sum_n x_n`.
    pub deformation: f64,
}

impl PhysicalState {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::LengthMismatch(format!(
                "q has {} sites, p has {}",
                q.len(),
                p.len()
            )));
        }
        let deformation = q.last().copied().unwrap_or(0.0);
        Ok(Self { q, p, deformation })
    }
}

/// `x_n = q_n - q_{n-1}`, and `y` solving `p_n = y_n - y_{n+1}` with `y_0 = 0`.
pub fn to_relative(state: &PhysicalState) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = state.q.len();
    if state.p.len() != n {
        return Err(Error::LengthMismatch(format!(
            "q has {} sites, p has {}",
            n,
            state.p.len()
        )));
    }
    let total = momentum(&state.p);
    let scale: f64 = state.p.iter().map(|v| v.abs()).sum();
    if total.abs() > 1e-12 * scale.max(1.0) {
        return Err(Error::NonzeroMomentum { total });
    }

    let mut prev = 0.0;
    let x = state
        .q
        .iter()
        .map(|&q| {
            let d = q - prev;
            prev = q;
            d
        })
        .collect();

    let mut y = vec![0.0; n];
    for i in 1..n {
        y[i] = y[i - 1] - state.p[i - 1];
    }
    Ok((x, y))
}

/// Inverse of [`to_relative`]: `q_n = sum_{l <= n} x_l`, `p_n = y_n - y_{n+1}`
/// with `y` vanishing past the right edge.
pub fn from_relative(x: &[f64], y: &[f64]) -> Result<PhysicalState> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(format!(
            "x has {} sites, y has {}",
            x.len(),
            y.len()
        )));
    }
    let mut acc = 0.0;
    let q: Vec<f64> = x
        .iter()
        .map(|&v| {
            acc += v;
            acc
        })
        .collect();
    let p = (0..y.len())
        .map(|i| y[i] - y.get(i + 1).copied().unwrap_or(0.0))
        .collect();
    Ok(PhysicalState {
        q,
        p,
        deformation: x.iter().sum(),
    })
}

/// Energy in relative variables, `sum_n (y_n - y_{n+1})^2/2 + V(x_n)`.
pub fn hamiltonian(x: &[f64], y: &[f64], spec: &PotentialSpec) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    (0..x.len())
        .map(|i| {
            let dy = y[i] - y.get(i + 1).copied().unwrap_or(0.0);
            0.5 * dy * dy + spec.v(x[i])
        })
        .sum()
}

/// Energy in the original variables, `sum_n p_n^2/2 + V(q_n - q_{n-1})`.
pub fn physical_hamiltonian(state: &PhysicalState, spec: &PotentialSpec) -> f64 {
    let mut prev = 0.0;
    state
        .q
        .iter()
        .zip(&state.p)
        .map(|(&q, &p)| {
            let e = 0.5 * p * p + spec.v(q - prev);
            prev = q;
            e
        })
        .sum()
}

/// Total momentum `sum_n p_n`.
pub fn momentum(p: &[f64]) -> f64 {
    p.iter().sum()
}
