//! JSON manifest and CSV artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Result;
use crate::field::{self, Parity, SpectralField};
use crate::solver::{BreatherResult, Status, TraceRecord};
use crate::validation::{BoundsReport, DecayFit, TrajectoryReport};

pub const SCHEMA_VERSION: u32 = 1;

pub const MANIFEST: &str = "manifest.json";
pub const PROFILE: &str = "profile.csv";
pub const SAMPLES: &str = "samples.csv";
pub const SPECTRAL: &str = "spectral.csv";
pub const DECAY: &str = "decay.csv";
pub const TRACE: &str = "trace.csv";

/// JSON has no NaN or infinity; those are written as `null` and read back as NaN.
mod lossy_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSummary {
    pub status: Status,
    pub omega: f64,
    pub parity: Parity,
    pub iterations: usize,
    #[serde(with = "lossy_f64")]
    pub fp_residual: f64,
    #[serde(with = "lossy_f64")]
    pub strong_residual: f64,
    #[serde(with = "lossy_f64")]
    pub x0_norm: f64,
    #[serde(with = "lossy_f64")]
    pub x2_norm: f64,
    #[serde(with = "lossy_f64")]
    pub parity_deviation: f64,
    pub decay_fit: Option<DecayFit>,
    pub message: Option<String>,
}

impl From<&BreatherResult> for ResultSummary {
    fn from(r: &BreatherResult) -> Self {
        Self {
            status: r.status,
            omega: r.omega,
            parity: r.parity,
            iterations: r.iterations,
            fp_residual: r.fp_residual,
            strong_residual: r.strong_residual,
            x0_norm: r.x0_norm,
            x2_norm: r.x2_norm,
            parity_deviation: r.parity_deviation,
            decay_fit: r.decay_fit,
            message: r.message.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    /// Canonical configuration text; re-running from it reproduces the result.
    pub config_echo: String,
    pub result: ResultSummary,
    pub bounds: Option<BoundsReport>,
    pub trajectory: Option<TrajectoryReport>,
    pub artifact_paths: Vec<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// One rendered output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

fn csv_bytes<R: Serialize>(header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

pub fn profile_csv(field: &SpectralField) -> Result<Vec<u8>> {
    let grid = field.grid;
    let prof = field::synthesize(field).max_abs_profile();
    csv_bytes(
        &["n", "max_abs_amplitude", "log_amplitude"],
        prof.iter().enumerate().map(|(i, a)| (grid.site(i), *a, a.ln())),
    )
}

pub fn samples_csv(field: &SpectralField) -> Result<Vec<u8>> {
    let grid = field.grid;
    let x = field::synthesize(field);
    let rows = (0..grid.n_sites).flat_map(|i| {
        let x = &x;
        (0..x.n_time).map(move |j| (grid.site(i), j, x.get(i, j)))
    });
    csv_bytes(&["n", "t_index", "value"], rows)
}

pub fn spectral_csv(field: &SpectralField) -> Result<Vec<u8>> {
    let grid = field.grid;
    let rows = (0..grid.n_sites).flat_map(|i| {
        (1..=grid.n_harmonics).map(move |m| {
            let c = field.get(i, m);
            (grid.site(i), m, c.re, c.im)
        })
    });
    csv_bytes(&["n", "m", "re", "im"], rows)
}

/// Every site with nonzero amplitude, with the fitted line when a fit exists.
pub fn decay_csv(field: &SpectralField, parity: Parity, fit: Option<&DecayFit>) -> Result<Vec<u8>> {
    let grid = field.grid;
    let prof = field::synthesize(field).max_abs_profile();
    let rows = prof.iter().enumerate().filter(|(_, a)| **a > 0.0).map(|(i, a)| {
        let d = (grid.site(i) as f64 - parity.center()).abs();
        (d, a.ln(), fit.map_or(f64::NAN, |f| f.line(d)))
    });
    csv_bytes(&["abs_n", "log_amp", "fit_line"], rows)
}

pub fn trace_csv(trace: &[TraceRecord]) -> Result<Vec<u8>> {
    csv_bytes(
        &["iter", "fp_residual", "x0_norm"],
        trace.iter().map(|t| (t.iter, t.fp_residual, t.x0_norm)),
    )
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        let (iter, fp_residual, x0_norm): (usize, f64, f64) = row?;
        out.push(TraceRecord {
            iter,
            fp_residual,
            x0_norm,
        });
    }
    Ok(out)
}

/// Reads a spectral dump back onto `grid`.
pub fn read_spectral_csv(path: &Path, grid: crate::field::GridSpec) -> Result<SpectralField> {
    let mut r = csv::Reader::from_path(path)?;
    let mut f = SpectralField::zeros(grid);
    let mut count = 0;
    for row in r.deserialize() {
        let (n, m, re, im): (i64, usize, f64, f64) = row?;
        if m == 0 || m > grid.n_harmonics || n < -(grid.n_sites as i64) / 2 || n >= grid.n_sites as i64 / 2 {
            return Err(crate::Error::LengthMismatch(format!("entry (n={n}, m={m}) outside the grid")));
        }
        f.set_at(n, m, rustfft::num_complex::Complex64::new(re, im));
        count += 1;
    }
    if count != grid.n_sites * grid.n_harmonics {
        return Err(crate::Error::LengthMismatch(format!(
            "{count} spectral entries, expected {}",
            grid.n_sites * grid.n_harmonics
        )));
    }
    Ok(f)
}

/// Renders the full artifact set of a solve; the manifest comes last and
/// lists the others.
pub fn render_outputs(
    result: &BreatherResult,
    config_echo: &str,
    trajectory: Option<TrajectoryReport>,
) -> Result<(RunManifest, Vec<Artifact>)> {
    let f = &result.field;
    let mut artifacts = vec![
        Artifact { name: PROFILE.into(), bytes: profile_csv(f)? },
        Artifact { name: SAMPLES.into(), bytes: samples_csv(f)? },
        Artifact { name: SPECTRAL.into(), bytes: spectral_csv(f)? },
        Artifact { name: DECAY.into(), bytes: decay_csv(f, result.parity, result.decay_fit.as_ref())? },
        Artifact { name: TRACE.into(), bytes: trace_csv(&result.trace)? },
    ];
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        config_echo: config_echo.to_string(),
        result: ResultSummary::from(result),
        bounds: result.bounds,
        trajectory,
        artifact_paths: artifacts.iter().map(|a| a.name.clone()).collect(),
    };
    artifacts.push(Artifact {
        name: MANIFEST.into(),
        bytes: manifest.to_json()?.into_bytes(),
    });
    Ok((manifest, artifacts))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    artifacts
        .iter()
        .map(|a| {
            let p = dir.join(&a.name);
            write_atomic(&p, &a.bytes)?;
            Ok(p)
        })
        .collect()
}
