use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state vector is identically zero")]
    ZeroState,

    #[error("gain/loss {gamma} is not below the tunneling amplitude {tunneling}: PT phase is broken")]
    BrokenPhase { gamma: f64, tunneling: f64 },

    #[error("on-site controller is near singular at t = {t}: det = {det:e}")]
    NearSingularController { det: f64, t: f64 },

    #[error("initial state violates the PT conditions: |r1| = {r1:e}, |r2| = {r2:e} (threshold {threshold:e})")]
    InitialConditionViolated { r1: f64, r2: f64, threshold: f64 },

    #[error("no reservoir phases reproduce the required currents (n0 = {n0}, n3 = {n3}, d = {d})")]
    NoEmbedding { n0: f64, n3: f64, d: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },

    #[error("trap targets out of reachable range for outer well {well}")]
    OutOfRange { well: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("missing required config key `{0}`")]
    MissingKey(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics (singular controller, non-convergence).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NearSingularController { .. }
                | Error::NoEmbedding { .. }
                | Error::NotConverged { .. }
                | Error::OutOfRange { .. }
                | Error::BrokenPhase { .. }
        )
    }
}
