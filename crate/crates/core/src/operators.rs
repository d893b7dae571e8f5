//! Linear wave operator `M u = u'' - (u_{n+1} - 2u_n + u_{n-1})`, its spectral
//! inverse, the nonlinear coupling `N`, and the fixed-point map `S = M^-1 N`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{self, GridSpec, SpectralField, TimeSamples, Transforms, WeightSpec};
use crate::lattice::{dispersion, PotentialSpec};

/// Smallest `|nu_m(k)|` tolerated by [`Operators::apply_m_inverse`].
pub const RESONANCE_GUARD: f64 = 1e-9;

/// Eigenvalues `nu_m(k_j) = -Omega^2 m^2 + 4 sin^2(k_j / 2)` of `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    pub omega: f64,
    /// `table[m - 1][j]`
    pub table: Vec<Vec<f64>>,
    pub min_abs: f64,
}

impl Multiplier {
    pub fn new(grid: &GridSpec) -> Self {
        let om2 = grid.omega * grid.omega;
        let table: Vec<Vec<f64>> = (1..=grid.n_harmonics)
            .map(|m| {
                (0..grid.n_sites)
                    .map(|j| nu(om2, m, grid.wavenumber(j)))
                    .collect()
            })
            .collect();
        let min_abs = table
            .iter()
            .flatten()
            .fold(f64::INFINITY, |a, v| a.min(v.abs()));
        Self {
            omega: grid.omega,
            table,
            min_abs,
        }
    }

    pub fn nu(&self, m: usize, j: usize) -> f64 {
        self.table[m - 1][j]
    }

    /// `Omega^2 > 4` and no table entry within the resonance guard.
    pub fn check_nonresonant(&self) -> Result<()> {
        let omega_sq = self.omega * self.omega;
        if !(omega_sq > 4.0) || self.min_abs < RESONANCE_GUARD {
            return Err(Error::Resonance {
                omega_sq,
                min_abs_nu: self.min_abs,
            });
        }
        Ok(())
    }
}

#[inline]
fn nu(omega_sq: f64, m: usize, k: f64) -> f64 {
    -omega_sq * (m * m) as f64 + dispersion(k)
}

/// Operators bound to one grid and potential.
#[derive(Debug, Clone)]
pub struct Operators {
    pub grid: GridSpec,
    pub potential: PotentialSpec,
    multiplier: Multiplier,
    inverse_table: Option<Vec<Vec<f64>>>,
    transforms: Transforms,
}

impl Operators {
    /// Fails if the grid's time sampling would alias the nonlinearity.
    pub fn new(grid: GridSpec, potential: PotentialSpec) -> Result<Self> {
        grid.validate()?;
        let degree = potential.nonlinearity_degree();
        let required = field::min_time_samples(grid.n_harmonics, degree);
        if !potential.is_harmonic() && grid.n_time_samples < required {
            return Err(Error::Aliasing {
                n_time_samples: grid.n_time_samples,
                n_harmonics: grid.n_harmonics,
                degree,
                required,
            });
        }
        let multiplier = Multiplier::new(&grid);
        let inverse_table = multiplier.check_nonresonant().ok().map(|_| {
            multiplier
                .table
                .iter()
                .map(|row| row.iter().map(|v| 1.0 / v).collect())
                .collect()
        });
        Ok(Self {
            grid,
            potential,
            multiplier,
            inverse_table,
            transforms: Transforms::for_grid(&grid),
        })
    }

    pub fn multiplier(&self) -> &Multiplier {
        &self.multiplier
    }

    pub fn transforms(&self) -> &Transforms {
        &self.transforms
    }

    pub fn check_nonresonant(&self) -> Result<()> {
        self.multiplier.check_nonresonant()
    }

    /// `M` by finite-difference stencil over the ring.
    pub fn apply_m(&self, u: &SpectralField) -> SpectralField {
        let n = self.grid.n_sites;
        let om2 = self.grid.omega * self.grid.omega;
        let mut out = SpectralField::zeros(self.grid);
        for i in 0..n {
            let ip = (i + 1) % n;
            let im = (i + n - 1) % n;
            for m in 1..=self.grid.n_harmonics {
                let c = u.get(i, m);
                let lap = u.get(ip, m) - c * 2.0 + u.get(im, m);
                out.set(i, m, c * (-om2 * (m * m) as f64) - lap);
            }
        }
        out
    }

    /// `M` as a multiplier in the spatial Fourier basis.
    pub fn apply_m_spectral(&self, u: &SpectralField) -> SpectralField {
        self.transforms
            .apply_spatial_multiplier(u, &self.multiplier.table)
    }

    pub fn apply_m_inverse(&self, u: &SpectralField) -> Result<SpectralField> {
        match &self.inverse_table {
            Some(table) => Ok(self.transforms.apply_spatial_multiplier(u, table)),
            None => Err(self.check_nonresonant().unwrap_err()),
        }
    }

    /// `W'(u_{n+1}) + W'(u_{n-1}) - 2 W'(u_n)` pointwise on samples.
    pub fn nonlinear_stencil(&self, samples: &TimeSamples) -> TimeSamples {
        nonlinear_stencil(samples, &self.potential)
    }

    /// `N(u)`, evaluated on the dealiased collocation grid and projected back
    /// onto harmonics `1..=M`.
    pub fn apply_n(&self, u: &SpectralField) -> SpectralField {
        if self.potential.is_harmonic() {
            return SpectralField::zeros(self.grid);
        }
        let samples = self.transforms.synthesize(u);
        let rhs = nonlinear_stencil(&samples, &self.potential);
        self.transforms.analyze(&rhs, self.grid)
    }

    /// Fixed-point map `S = M^-1 N`.
    pub fn apply_s(&self, u: &SpectralField) -> Result<SpectralField> {
        self.apply_m_inverse(&self.apply_n(u))
    }

    /// `M u - N u`; vanishes exactly at breathers.
    pub fn strong_residual_field(&self, u: &SpectralField) -> SpectralField {
        self.apply_m(u).sub(&self.apply_n(u))
    }
}

/// Pointwise `W'` followed by the second difference over the ring.
pub fn nonlinear_stencil(samples: &TimeSamples, potential: &PotentialSpec) -> TimeSamples {
    let n = samples.n_sites;
    let nt = samples.n_time;
    let wp: Vec<f64> = samples.data.iter().map(|&x| potential.w_prime(x)).collect();
    let mut out = TimeSamples::zeros(n, nt);
    for i in 0..n {
        let ip = (i + 1) % n;
        let im = (i + n - 1) % n;
        for j in 0..nt {
            let v = wp[ip * nt + j] + wp[im * nt + j] - 2.0 * wp[i * nt + j];
            out.set(i, j, v);
        }
    }
    out
}

/// Plane wave `exp(i k_j n) / 2` in harmonic `m`.
pub fn plane_wave(grid: GridSpec, m: usize, j: usize) -> SpectralField {
    let k = grid.wavenumber(j);
    let mut f = SpectralField::zeros(grid);
    for i in 0..grid.n_sites {
        let n = grid.site(i) as f64;
        f.set(i, m, Complex64::from_polar(0.5, k * n));
    }
    f
}

/// Empirical and exact `X0 -> X0` norm of `M^-1` (uniform weight).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorNormProbe {
    /// Largest `||M^-1 u|| / ||u||` over the random probes.
    pub empirical: f64,
    /// `1 / (Omega^2 - 4)`.
    pub exact: f64,
    /// Ratio on the `(m = 1, k = pi)` mode.
    pub extremal: f64,
    /// Largest `||M^-1 u||_{X2} / ||u||_{X0}` over the probes.
    pub x2_ratio: f64,
    pub trials: usize,
}

/// Probes `||M^-1||` with `trials` random fields drawn from a seeded generator.
pub fn probe_operator_norm(omega: f64, grid: GridSpec, trials: usize, seed: u64) -> Result<OperatorNormProbe> {
    let grid = grid.with_omega(omega);
    let ops = Operators::new(grid, PotentialSpec::HARMONIC)?;
    ops.check_nonresonant()?;
    let w = WeightSpec::uniform();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut empirical: f64 = 0.0;
    let mut x2_ratio: f64 = 0.0;
    for _ in 0..trials {
        let u = SpectralField::random(grid, &mut rng);
        let u = u.scaled(1.0 / field::x0_norm(&u, &w)?);
        let v = ops.apply_m_inverse(&u)?;
        empirical = empirical.max(field::x0_norm(&v, &w)?);
        x2_ratio = x2_ratio.max(field::x2_norm(&v, &w)?);
    }
    let mode = plane_wave(grid, 1, grid.n_sites / 2);
    let extremal = field::x0_norm(&ops.apply_m_inverse(&mode)?, &w)? / field::x0_norm(&mode, &w)?;
    Ok(OperatorNormProbe {
        empirical,
        exact: 1.0 / (omega * omega - 4.0),
        extremal,
        x2_ratio,
        trials,
    })
}
