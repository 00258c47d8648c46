use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("fock_cap must be at least 1 to host photon hopping")]
    ZeroFockCap,

    #[error("{what} index {index} out of range (valid: {valid})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        valid: &'static str,
    },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("analytic resonant eigensystem holds only for J = g (got J = {j}, g = {g})")]
    ResonantNeedsJEqualG { j: f64, g: f64 },

    #[error("dipole-dipole form holds only for Delta = J = g (got Delta = {delta}, J = {j}, g = {g})")]
    DispersiveNeedsDeltaJG { delta: f64, j: f64, g: f64 },

    #[error("eigenvalue clustering is ambiguous: gap {gap:e} lies between tolerance {tolerance:e} and ten times it")]
    AmbiguousClusters { gap: f64, tolerance: f64 },

    #[error("state norm drifted by {drift:e} at t = {time} (dt = {dt}); reduce the step size")]
    NormDrift { time: f64, drift: f64, dt: f64 },

    #[error("density trace drifted by {drift:e} at t = {time} (dt = {dt}); reduce the step size")]
    TraceDrift { time: f64, drift: f64, dt: f64 },

    #[error("average gate fidelity has imaginary residue {0:e}")]
    ImaginaryResidue(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
