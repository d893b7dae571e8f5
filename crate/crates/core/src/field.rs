//! Space-time Fourier representation of `T`-periodic, zero-mean lattice fields.
//!
//! A [`SpectralField`] stores `u_{n,m}` for sites `n` and harmonics `m = 1..=M`;
//! negative harmonics are the complex conjugates and `m = 0` is absent, so the
//! physical field is real with zero time average by construction.
//!
//! Sites sit on a ring of `N` sites. Storage index `i` corresponds to the
//! physical site `n = i - N/2`, so the lattice covers `-N/2 ..= N/2 - 1`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::PotentialSpec;

/// Largest exponent `lambda * N/2` accepted before weights overflow.
const MAX_WEIGHT_EXPONENT: f64 = 700.0;

/// Discretisation of one period of a lattice field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_sites: usize,
    pub n_harmonics: usize,
    pub n_time_samples: usize,
    pub omega: f64,
}

impl GridSpec {
    pub fn new(n_sites: usize, n_harmonics: usize, n_time_samples: usize, omega: f64) -> Result<Self> {
        let grid = Self {
            n_sites,
            n_harmonics,
            n_time_samples,
            omega,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid with the smallest power-of-two sample count that evaluates the
    /// nonlinearity of `potential` without aliasing.
    pub fn for_potential(
        n_sites: usize,
        n_harmonics: usize,
        omega: f64,
        potential: &PotentialSpec,
    ) -> Result<Self> {
        let n_time_samples = min_time_samples(n_harmonics, potential.nonlinearity_degree())
            .next_power_of_two();
        Self::new(n_sites, n_harmonics, n_time_samples, omega)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 8 || self.n_sites % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "n_sites must be even and >= 8, got {}",
                self.n_sites
            )));
        }
        if self.n_harmonics < 1 {
            return Err(Error::InvalidGrid("n_harmonics must be >= 1".into()));
        }
        if self.n_time_samples < 2 * self.n_harmonics + 1 {
            return Err(Error::InvalidGrid(format!(
                "n_time_samples = {} is below the Nyquist count {}",
                self.n_time_samples,
                2 * self.n_harmonics + 1
            )));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        Ok(())
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.period() / self.n_time_samples as f64
    }

    /// Physical site index of storage index `i`.
    #[inline]
    pub fn site(&self, i: usize) -> i64 {
        i as i64 - (self.n_sites / 2) as i64
    }

    /// Storage index of physical site `n`, wrapped onto the ring.
    #[inline]
    pub fn index(&self, n: i64) -> usize {
        (n + (self.n_sites / 2) as i64).rem_euclid(self.n_sites as i64) as usize
    }

    /// Wavenumber of spatial FFT bin `j`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_sites as f64
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }
}

/// `2 (deg + 1) M + 1`: samples needed for an alias-free `W'` of degree `deg`.
pub fn min_time_samples(n_harmonics: usize, degree: usize) -> usize {
    2 * (degree + 1) * n_harmonics + 1
}

/// Spatial symmetry class of a breather.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    /// Centred between sites `-1` and `0`: `u_n(t) = -u_{-(n+1)}(t)`.
    Even,
    /// Centred on site `0`: `u_n(t) = -u_{-n}(t + T/2)`.
    Odd,
}

impl Parity {
    /// Position of the symmetry centre in physical site units.
    pub fn center(self) -> f64 {
        match self {
            Parity::Even => -0.5,
            Parity::Odd => 0.0,
        }
    }

    pub fn weight_center(self) -> WeightCenter {
        match self {
            Parity::Even => WeightCenter::Bond,
            Parity::Odd => WeightCenter::Site,
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

impl std::str::FromStr for Parity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            other => Err(format!("unknown parity `{other}` (expected even|odd)")),
        }
    }
}

/// Where `|n|` is measured from in the weight `exp(lambda |n - c|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightCenter {
    /// `c = 0`
    Site,
    /// `c = -1/2`
    Bond,
}

/// Exponential weight `w_n = exp(lambda |n - c|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub lambda: f64,
    pub center: WeightCenter,
}

impl WeightSpec {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            center: WeightCenter::Site,
        }
    }

    pub fn for_parity(lambda: f64, parity: Parity) -> Self {
        Self {
            lambda,
            center: parity.weight_center(),
        }
    }

    pub fn uniform() -> Self {
        Self::new(0.0)
    }

    fn offset(&self) -> f64 {
        match self.center {
            WeightCenter::Site => 0.0,
            WeightCenter::Bond => 0.5,
        }
    }

    /// Weights for a ring of `n_sites`, in storage order.
    pub fn weights(&self, n_sites: usize) -> Result<Vec<f64>> {
        let exponent = self.lambda * (n_sites / 2) as f64;
        if !(exponent <= MAX_WEIGHT_EXPONENT) {
            return Err(Error::WeightOverflow { exponent });
        }
        let half = (n_sites / 2) as f64;
        Ok((0..n_sites)
            .map(|i| (self.lambda * (i as f64 - half + self.offset()).abs()).exp())
            .collect())
    }
}

/// Real samples `u_n(t_j)`, `t_j = j T / N_t`, stored site-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSamples {
    pub n_sites: usize,
    pub n_time: usize,
    pub data: Vec<f64>,
}

impl TimeSamples {
    pub fn zeros(n_sites: usize, n_time: usize) -> Self {
        Self {
            n_sites,
            n_time,
            data: vec![0.0; n_sites * n_time],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_time + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n_time + j] = v;
    }

    pub fn site(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_time..(i + 1) * self.n_time]
    }

    /// Profile `u_n(t_j)` across all sites at one time index.
    pub fn snapshot(&self, j: usize) -> Vec<f64> {
        (0..self.n_sites).map(|i| self.get(i, j)).collect()
    }

    /// `max_j |u_n(t_j)|` for every site.
    pub fn max_abs_profile(&self) -> Vec<f64> {
        (0..self.n_sites)
            .map(|i| self.site(i).iter().fold(0.0f64, |a, v| a.max(v.abs())))
            .collect()
    }

    pub fn time_means(&self) -> Vec<f64> {
        (0..self.n_sites)
            .map(|i| self.site(i).iter().sum::<f64>() / self.n_time as f64)
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// Cached FFT plans for one grid.
#[derive(Clone)]
pub struct Transforms {
    n_sites: usize,
    n_time: usize,
    time_fwd: Arc<dyn Fft<f64>>,
    time_inv: Arc<dyn Fft<f64>>,
    space_fwd: Arc<dyn Fft<f64>>,
    space_inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Transforms {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transforms")
            .field("n_sites", &self.n_sites)
            .field("n_time", &self.n_time)
            .finish()
    }
}

impl Transforms {
    pub fn new(n_sites: usize, n_time: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n_sites,
            n_time,
            time_fwd: planner.plan_fft_forward(n_time),
            time_inv: planner.plan_fft_inverse(n_time),
            space_fwd: planner.plan_fft_forward(n_sites),
            space_inv: planner.plan_fft_inverse(n_sites),
        }
    }

    pub fn for_grid(grid: &GridSpec) -> Self {
        Self::new(grid.n_sites, grid.n_time_samples)
    }

    /// Samples on `n_time` collocation points (which may exceed the grid's own).
    pub fn synthesize(&self, field: &SpectralField) -> TimeSamples {
        let n_harm = field.grid.n_harmonics;
        let nt = self.n_time;
        assert!(nt > 2 * n_harm, "time grid too coarse for field");
        assert_eq!(field.grid.n_sites, self.n_sites);
        let mut out = TimeSamples::zeros(self.n_sites, nt);
        let mut buf = vec![Complex64::new(0.0, 0.0); nt];
        for i in 0..self.n_sites {
            buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for (m, &c) in field.site_coeffs(i).iter().enumerate() {
                buf[m + 1] = c;
                buf[nt - m - 1] = c.conj();
            }
            self.time_inv.process(&mut buf);
            for (j, c) in buf.iter().enumerate() {
                out.set(i, j, c.re);
            }
        }
        out
    }

    /// Harmonics `1..=M` of the samples; the mean and higher harmonics are dropped.
    pub fn analyze(&self, samples: &TimeSamples, grid: GridSpec) -> SpectralField {
        assert_eq!(samples.n_time, self.n_time);
        assert_eq!(samples.n_sites, grid.n_sites);
        let nt = self.n_time;
        let n_harm = grid.n_harmonics;
        assert!(nt > 2 * n_harm, "time grid too coarse for field");
        let scale = 1.0 / nt as f64;
        let mut field = SpectralField::zeros(grid);
        let mut buf = vec![Complex64::new(0.0, 0.0); nt];
        for i in 0..samples.n_sites {
            for (b, &v) in buf.iter_mut().zip(samples.site(i)) {
                *b = Complex64::new(v, 0.0);
            }
            self.time_fwd.process(&mut buf);
            for (m, c) in field.site_coeffs_mut(i).iter_mut().enumerate() {
                *c = buf[m + 1] * scale;
            }
        }
        field
    }

    /// Multiplies every harmonic by `table[m-1][j]` in the spatial Fourier basis.
    pub fn apply_spatial_multiplier(&self, field: &SpectralField, table: &[Vec<f64>]) -> SpectralField {
        let n = self.n_sites;
        let n_harm = field.grid.n_harmonics;
        let scale = 1.0 / n as f64;
        let mut out = field.clone();
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for m in 0..n_harm {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = field.coeffs[i * n_harm + m];
            }
            self.space_fwd.process(&mut buf);
            for (b, &nu) in buf.iter_mut().zip(&table[m]) {
                *b *= nu * scale;
            }
            self.space_inv.process(&mut buf);
            for (i, b) in buf.iter().enumerate() {
                out.coeffs[i * n_harm + m] = *b;
            }
        }
        out
    }

    /// Solves `(2 - 2 cos k) y = v` on the ring with the `k = 0` mode of `y` set to zero.
    pub fn solve_neg_laplacian(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n_sites;
        assert_eq!(v.len(), n);
        let mut buf: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.space_fwd.process(&mut buf);
        for (j, b) in buf.iter_mut().enumerate() {
            if j == 0 {
                *b = Complex64::new(0.0, 0.0);
            } else {
                let k = 2.0 * PI * j as f64 / n as f64;
                *b /= (2.0 - 2.0 * k.cos()) * n as f64;
            }
        }
        self.space_inv.process(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }
}

/// Zero-mean space-time Fourier coefficients of a real lattice field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: GridSpec,
    /// `coeffs[i * M + (m - 1)]` is `u_{n(i), m}`.
    pub coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n_sites * grid.n_harmonics],
        }
    }

    /// Coefficient at storage index `i` and harmonic `m >= 1`.
    #[inline]
    pub fn get(&self, i: usize, m: usize) -> Complex64 {
        self.coeffs[i * self.grid.n_harmonics + m - 1]
    }

    #[inline]
    pub fn set(&mut self, i: usize, m: usize, v: Complex64) {
        let n_harm = self.grid.n_harmonics;
        self.coeffs[i * n_harm + m - 1] = v;
    }

    /// Coefficient at physical site `n`.
    pub fn at(&self, n: i64, m: usize) -> Complex64 {
        self.get(self.grid.index(n), m)
    }

    pub fn set_at(&mut self, n: i64, m: usize, v: Complex64) {
        let i = self.grid.index(n);
        self.set(i, m, v);
    }

    pub fn site_coeffs(&self, i: usize) -> &[Complex64] {
        let n_harm = self.grid.n_harmonics;
        &self.coeffs[i * n_harm..(i + 1) * n_harm]
    }

    pub fn site_coeffs_mut(&mut self, i: usize) -> &mut [Complex64] {
        let n_harm = self.grid.n_harmonics;
        &mut self.coeffs[i * n_harm..(i + 1) * n_harm]
    }

    /// Random field with independent standard normal real and imaginary parts.
    pub fn random<R: Rng + ?Sized>(grid: GridSpec, rng: &mut R) -> Self {
        let coeffs = (0..grid.n_sites * grid.n_harmonics)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self { grid, coeffs }
    }

    /// Same coefficients on a grid with a different frequency.
    pub fn with_omega(&self, omega: f64) -> Self {
        Self {
            grid: self.grid.with_omega(omega),
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &SpectralField) -> Self {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| x + y * a)
                .collect(),
        }
    }

    pub fn sub(&self, other: &SpectralField) -> Self {
        self.axpy(-1.0, other)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Coefficients flattened to `[re, im, re, im, ...]`.
    pub fn to_real_vec(&self) -> Vec<f64> {
        self.coeffs.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn from_real_vec(grid: GridSpec, v: &[f64]) -> Self {
        assert_eq!(v.len(), 2 * grid.n_sites * grid.n_harmonics);
        Self {
            grid,
            coeffs: v.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect(),
        }
    }

    /// Embeds the field in a grid with more sites and harmonics; new entries are zero.
    pub fn interpolate(&self, grid: GridSpec) -> Result<Self> {
        if grid.n_sites < self.grid.n_sites || grid.n_harmonics < self.grid.n_harmonics {
            return Err(Error::InvalidGrid(
                "interpolation target must not be coarser than the source".into(),
            ));
        }
        let mut out = SpectralField::zeros(grid);
        for i in 0..self.grid.n_sites {
            let n = self.grid.site(i);
            for m in 1..=self.grid.n_harmonics {
                out.set_at(n, m, self.get(i, m));
            }
        }
        Ok(out)
    }
}

/// Samples on the grid's own collocation points.
pub fn synthesize(field: &SpectralField) -> TimeSamples {
    Transforms::for_grid(&field.grid).synthesize(field)
}

/// Projects samples onto harmonics `1..=M` of `grid`.
pub fn analyze(samples: &TimeSamples, grid: GridSpec) -> SpectralField {
    Transforms::new(grid.n_sites, samples.n_time).analyze(samples, grid)
}

/// `sqrt(sum_n w_n |u_n|^2)` for a profile on the ring (storage order).
pub fn weighted_profile_norm(profile: &[f64], weight: &WeightSpec) -> Result<f64> {
    let w = weight.weights(profile.len())?;
    Ok(profile
        .iter()
        .zip(&w)
        .map(|(u, w)| w * u * u)
        .sum::<f64>()
        .sqrt())
}

fn weighted_harmonic_norm(field: &SpectralField, weight: &WeightSpec, factor: impl Fn(usize) -> f64) -> Result<f64> {
    let w = weight.weights(field.grid.n_sites)?;
    let mut sum = 0.0;
    for (i, wi) in w.iter().enumerate() {
        let site: f64 = field
            .site_coeffs(i)
            .iter()
            .enumerate()
            .map(|(m, c)| factor(m + 1) * c.norm_sqr())
            .sum();
        sum += wi * site;
    }
    Ok((2.0 * sum).sqrt())
}

/// Time-averaged weighted norm, computed by Parseval:
/// `||u||^2 = sum_n w_n 2 sum_m |u_{n,m}|^2`.
pub fn x0_norm(field: &SpectralField, weight: &WeightSpec) -> Result<f64> {
    weighted_harmonic_norm(field, weight, |_| 1.0)
}

/// Norm including the first two time derivatives.
pub fn x2_norm(field: &SpectralField, weight: &WeightSpec) -> Result<f64> {
    let om2 = field.grid.omega * field.grid.omega;
    weighted_harmonic_norm(field, weight, |m| {
        let a = om2 * (m * m) as f64;
        1.0 + a + a * a
    })
}

/// Average with the image under `n -> -(n+1)`, sign flipped.
pub fn project_even(field: &SpectralField) -> SpectralField {
    let n = field.grid.n_sites;
    let mut out = field.clone();
    for i in 0..n {
        let j = n - 1 - i;
        for m in 1..=field.grid.n_harmonics {
            out.set(i, m, (field.get(i, m) - field.get(j, m)) * 0.5);
        }
    }
    out
}

/// Average with the image under `n -> -n` combined with a half-period shift
/// and a sign flip: `u_{n,m} = -(-1)^m u_{-n,m}`.
pub fn project_odd(field: &SpectralField) -> SpectralField {
    let n = field.grid.n_sites;
    let mut out = field.clone();
    for i in 0..n {
        let j = (n - i) % n;
        for m in 1..=field.grid.n_harmonics {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            out.set(i, m, (field.get(i, m) - field.get(j, m) * sign) * 0.5);
        }
    }
    out
}

pub fn project(field: &SpectralField, parity: Parity) -> SpectralField {
    match parity {
        Parity::Even => project_even(field),
        Parity::Odd => project_odd(field),
    }
}

/// Localised first-harmonic seed `A (-1)^n sech(width (n - n_c)) cos(Omega t)`,
/// projected onto the requested parity.
pub fn seed_field(grid: GridSpec, parity: Parity, amplitude: f64, width: f64) -> SpectralField {
    let center = parity.center();
    let mut field = SpectralField::zeros(grid);
    for i in 0..grid.n_sites {
        let n = grid.site(i);
        let stagger = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let envelope = 1.0 / (width * (n as f64 - center)).cosh();
        field.set(i, 1, Complex64::new(0.5 * amplitude * stagger * envelope, 0.0));
    }
    project(&field, parity)
}
