use thiserror::Error;

/// Errors shared by every layer of the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite parameter `{name}` = {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("parameter `{name}` = {value} is out of range: {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("matrix is not symplectic (defect {defect:.3e})")]
    NotSymplectic { defect: f64 },

    #[error("covariance matrix is not symmetric (defect {defect:.3e})")]
    NotSymmetric { defect: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance matrix violates the uncertainty relation (min symplectic eigenvalue {nu_min})")]
    Unphysical { nu_min: f64 },

    #[error("heralding block is numerically singular (det {det:.3e})")]
    IllConditioned { det: f64 },

    #[error("two-mode state is not symmetric: |det A - det B| = {defect:.3e}")]
    AsymmetricState { defect: f64 },

    #[error("quadrature form is not vacuum-normalized (variance {variance})")]
    UnnormalizedForm { variance: f64 },

    #[error("mode subset is invalid: {0}")]
    BadModeSubset(String),

    #[error("Fock-space size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("state norm {0:.3e} is too small to normalize")]
    NormTooSmall(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("sweep grid is empty")]
    EmptyGrid,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
