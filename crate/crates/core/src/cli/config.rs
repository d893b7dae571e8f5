//! Flat `section.key = value` configuration files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::field::{min_time_samples, GridSpec, Parity, WeightSpec};
use crate::lattice::PotentialSpec;
use crate::solver::{SeedSpec, SolverConfig, Strategy};

const KEYS: &[&str] = &[
    "grid.omega",
    "grid.n_sites",
    "grid.n_harmonics",
    "grid.n_time_samples",
    "weight.lambda",
    "potential.cubic",
    "potential.quartic",
    "solver.parity",
    "solver.strategy",
    "solver.damping",
    "solver.accel_depth",
    "solver.tol_residual",
    "solver.tol_zero",
    "solver.max_iter",
    "seed.amplitude",
    "seed.width",
];

/// Raw key-value pairs with the line each came from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigDraft {
    entries: BTreeMap<String, (usize, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConfig {
    pub config: SolverConfig,
    pub warnings: Vec<String>,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

impl ConfigDraft {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `section.key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(err(line, format!("unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(err(line, format!("missing value for `{key}`")));
            }
            if let Some((first, _)) = entries.get(key) {
                return Err(err(line, format!("duplicate key `{key}` (first set on line {first})")));
            }
            entries.insert(key.to_string(), (line, value.to_string()));
        }
        Ok(Self { entries })
    }

    /// Overrides (or adds) a key, as from a command-line flag. Line 0 marks
    /// values that did not come from the file.
    pub fn set(&mut self, key: &str, value: impl ToString) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(err(0, format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), (0, value.to_string()));
        Ok(())
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| err(*line, format!("invalid value `{v}` for `{key}`: {e}"))),
        }
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.0)
    }

    pub fn resolve(&self) -> Result<ParsedConfig> {
        let mut warnings = Vec::new();
        let omega: f64 = self
            .get("grid.omega")?
            .ok_or_else(|| err(0, "missing required key `grid.omega`"))?;
        let range = |key: &str, ok: bool, what: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(err(self.line(key), format!("`{key}` {what}")))
            }
        };
        range("grid.omega", omega.is_finite() && omega > 0.0, "must be a positive number")?;
        if omega * omega <= 4.0 {
            warnings.push(format!(
                "omega^2 = {} <= 4 lies in the phonon band; solving will fail with a resonance error",
                omega * omega
            ));
        }

        let n_sites: usize = self.get("grid.n_sites")?.unwrap_or(64);
        range("grid.n_sites", n_sites >= 8 && n_sites % 2 == 0, "must be an even number >= 8")?;
        let n_harmonics: usize = self.get("grid.n_harmonics")?.unwrap_or(16);
        range("grid.n_harmonics", n_harmonics >= 1, "must be >= 1")?;

        let cubic: f64 = self.get("potential.cubic")?.unwrap_or(0.0);
        let quartic: f64 = self.get("potential.quartic")?.unwrap_or(1.0);
        range("potential.cubic", cubic.is_finite(), "must be finite")?;
        range("potential.quartic", quartic.is_finite(), "must be finite")?;
        let potential = PotentialSpec::new(cubic, quartic);

        let n_time_samples = match self.get::<usize>("grid.n_time_samples")? {
            Some(nt) => {
                let required = min_time_samples(n_harmonics, potential.nonlinearity_degree());
                let floor = if potential.is_harmonic() { 2 * n_harmonics + 1 } else { required };
                range(
                    "grid.n_time_samples",
                    nt >= floor,
                    &format!("must be >= {floor} to avoid aliasing"),
                )?;
                nt
            }
            None => GridSpec::for_potential(n_sites, n_harmonics, omega, &potential)?.n_time_samples,
        };
        let grid = GridSpec::new(n_sites, n_harmonics, n_time_samples, omega)
            .map_err(|e| err(self.line("grid.n_sites"), e.to_string()))?;

        let parity: Parity = self.get("solver.parity")?.unwrap_or(Parity::Odd);
        let lambda: f64 = self.get("weight.lambda")?.unwrap_or(0.0);
        range("weight.lambda", lambda.is_finite() && lambda >= 0.0, "must be >= 0")?;
        let weight = WeightSpec::for_parity(lambda, parity);
        weight
            .weights(n_sites)
            .map_err(|e| err(self.line("weight.lambda"), e.to_string()))?;

        let mut config = SolverConfig::new(grid, potential, parity);
        config.weight = weight;
        if let Some(s) = self.get::<Strategy>("solver.strategy")? {
            config.strategy = s;
        }
        if let Some(d) = self.get::<f64>("solver.damping")? {
            range("solver.damping", d > 0.0 && d <= 1.0, "must lie in (0, 1]")?;
            config.damping = d;
        }
        if let Some(d) = self.get::<usize>("solver.accel_depth")? {
            config.accel_depth = d;
        }
        if let Some(t) = self.get::<f64>("solver.tol_residual")? {
            range("solver.tol_residual", t > 0.0, "must be positive")?;
            config.tol_residual = t;
        }
        if let Some(t) = self.get::<f64>("solver.tol_zero")? {
            range("solver.tol_zero", t > 0.0, "must be positive")?;
            config.tol_zero = t;
        }
        if let Some(m) = self.get::<usize>("solver.max_iter")? {
            range("solver.max_iter", m >= 1, "must be >= 1")?;
            config.max_iter = m;
        }
        let amplitude: Option<f64> = self.get("seed.amplitude")?;
        if let Some(a) = amplitude {
            range("seed.amplitude", a.is_finite(), "must be finite")?;
        }
        let width: f64 = self.get("seed.width")?.unwrap_or(1.0);
        range("seed.width", width.is_finite() && width > 0.0, "must be positive")?;
        config.seed = SeedSpec { amplitude, width };

        Ok(ParsedConfig { config, warnings })
    }
}

pub fn parse_config(text: &str) -> Result<ParsedConfig> {
    ConfigDraft::parse(text)?.resolve()
}

/// Canonical text form; every key is written, floats in shortest round-trip form.
pub fn serialize_config(config: &SolverConfig) -> String {
    let mut s = String::new();
    let g = &config.grid;
    let _ = writeln!(s, "grid.omega = {:?}", g.omega);
    let _ = writeln!(s, "grid.n_sites = {}", g.n_sites);
    let _ = writeln!(s, "grid.n_harmonics = {}", g.n_harmonics);
    let _ = writeln!(s, "grid.n_time_samples = {}", g.n_time_samples);
    let _ = writeln!(s, "weight.lambda = {:?}", config.weight.lambda);
    let _ = writeln!(s, "potential.cubic = {:?}", config.potential.cubic);
    let _ = writeln!(s, "potential.quartic = {:?}", config.potential.quartic);
    let _ = writeln!(s, "solver.parity = {}", config.parity);
    let _ = writeln!(s, "solver.strategy = {}", config.strategy);
    let _ = writeln!(s, "solver.damping = {:?}", config.damping);
    let _ = writeln!(s, "solver.accel_depth = {}", config.accel_depth);
    let _ = writeln!(s, "solver.tol_residual = {:?}", config.tol_residual);
    let _ = writeln!(s, "solver.tol_zero = {:?}", config.tol_zero);
    let _ = writeln!(s, "solver.max_iter = {}", config.max_iter);
    if let Some(a) = config.seed.amplitude {
        let _ = writeln!(s, "seed.amplitude = {a:?}");
    }
    let _ = writeln!(s, "seed.width = {:?}", config.seed.width);
    s
}
