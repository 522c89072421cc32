use std::path::PathBuf;

use crate::rayleigh::DispersionCurve;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain too small: y_max = {y_max} but at least {required} is needed to resolve the profile decay")]
    DomainTooSmall { y_max: f64, required: f64 },

    #[error("slip coefficient a = 0 admits no unstable matched profile")]
    ZeroSlip,

    #[error("non-removable singularity in K at y = {y}: u - u0 = {gap:e}, u'' = {u2:e}")]
    NonRemovableSingularity { y: f64, gap: f64, u2: f64 },

    #[error("profile has no inflection point")]
    NoInflection,

    #[error("potential has not decayed at y_max: K(y_max) = {value:e} > {limit:e}")]
    PotentialNotDecayed { value: f64, limit: f64 },

    #[error("test function violates the wall condition: u(0) = {value:e}")]
    BoundaryViolation { value: f64 },

    #[error("Newton iteration did not converge after {iterations} steps (|psi(0)| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("iterate left the upper half plane at c = {re} + {im}i: no unstable mode from this guess")]
    LeftHalfPlane { re: f64, im: f64 },

    #[error("dispersion continuation broke at k = {at_k} after three consecutive failures")]
    ContinuationBroken { at_k: f64, partial: Box<DispersionCurve> },

    #[error("CFL violation: number {cfl:.3} exceeds bound {bound:.3}")]
    CflViolation { cfl: f64, bound: f64 },

    #[error("wave-packet envelope support [{lo}, {hi}] leaves the instability band [{band_lo}, {band_hi}]")]
    BandViolation { lo: f64, hi: f64, band_lo: f64, band_hi: f64 },

    #[error("drift window needs {steps} steps, budget is {budget}")]
    WindowTooLong { steps: usize, budget: usize },

    #[error("blow-up detected at t = {t}: sup|omega| = {sup:e}")]
    BlowupDetected { t: f64, sup: f64 },

    #[error("perturbation decayed over the first fifth of the time budget ({initial:e} -> {later:e})")]
    NoGrowthDetected { initial: f64, later: f64 },

    #[error("parameter violation: {0}")]
    ParameterViolation(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
