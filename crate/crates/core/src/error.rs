use thiserror::Error;

/// Errors produced by the solver, operators and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error(
        "aliasing: {n_time_samples} time samples cannot represent degree-{degree} nonlinearity \
         with {n_harmonics} harmonics (need at least {required})"
    )]
    Aliasing {
        n_time_samples: usize,
        n_harmonics: usize,
        degree: usize,
        required: usize,
    },

    #[error("resonance: omega^2 = {omega_sq} with min |nu| = {min_abs_nu:e} (need omega^2 > 4)")]
    Resonance { omega_sq: f64, min_abs_nu: f64 },

    #[error("weight overflow: lambda * N/2 = {exponent} exceeds 700")]
    WeightOverflow { exponent: f64 },

    #[error(
        "no global growth bound for W with cubic = {cubic}, quartic = {quartic}; \
         use a local bound with an amplitude cap"
    )]
    NoGlobalGrowthBound { cubic: f64, quartic: f64 },

    #[error("inconsistent state: total momentum {total} must vanish for relative variables")]
    NonzeroMomentum { total: f64 },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("insufficient tail: {usable} usable sites, need at least 4")]
    InsufficientTail { usable: usize },

    #[error("integration blew up at step {step}")]
    BlowUp { step: usize },

    #[error("result not converged: {0}")]
    NotConverged(String),

    #[error("incompatible results: {0}")]
    Incompatible(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
