use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature under-resolved: successive refinements differ by {diff:e} (tolerance {tol:e})")]
    QuadratureUnderResolved { diff: f64, tol: f64 },

    #[error("matrix is not symmetric: relative asymmetry {0:e}")]
    NotSymmetric(f64),

    #[error("eigensolver did not converge")]
    NoConvergence,

    #[error("energy window [{lo}, {hi}] is empty at eta = {eta}")]
    EmptyWindow { eta: f64, lo: f64, hi: f64 },

    #[error("gap minima at eta = {first} and eta = {second} share a window")]
    OverlappingCrossings { first: f64, second: f64 },

    #[error("eigenvector sign tracking failed at eta = {eta} (overlap {overlap})")]
    SignTrackingFailure { eta: f64, overlap: f64 },

    #[error("gap minimum lies on the window boundary (eta = {0})")]
    MinimumAtBoundary(f64),

    #[error("negative discriminant at {excluded} of {total} points")]
    NegativeDiscriminant { excluded: usize, total: usize },

    #[error("no root within trust region: {0}")]
    NoRoot(String),

    #[error("parabolic crossing fit has no real root")]
    NoRealRoot,

    #[error("energy {energy} at eta = {eta} is not above threshold {e0}")]
    ThresholdViolation { eta: f64, energy: f64, e0: f64 },

    #[error("least-squares system is ill-conditioned: {0}")]
    IllConditioned(String),

    #[error("resonance tracking lost at theta = {0}")]
    TrackingLost(f64),

    #[error("extrapolation window [{lo}, {hi}] is not stable: {reason}")]
    UnstableWindow { lo: f64, hi: f64, reason: String },

    #[error("no stationary point found on any trajectory off the rotated continuum")]
    NoStationaryPoint,

    #[error("{path}:{line}: {msg}")]
    Schema { path: PathBuf, line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
