//! Closed-form ensemble approximations for the noise-averaged channel and
//! their asymptotic (large-redundancy) limits.
//!
//! The averaged covariance pushes the expectation inside the nonlinear map:
//! `a = (1 + t²)/(1 - t²)` and `c = 2t/(1 - t²) · ⟨cos Θ⟩` with
//! `t = ⟨tanh r'⟩ = (1 - v/2 - v/2n) tanh r`. The Monte Carlo engine computes
//! the unfactorized truth for error quantification.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::channel::{success_probability, Convention};
use crate::error::Result;
use crate::gaussian;

/// Above this phase variance the small-noise expansion is unreliable; results
/// are still computed but flagged.
pub const SMALL_NOISE_LIMIT: f64 = 0.5;

/// Ensemble-averaged channel metrics.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleMetrics {
    pub mean_tanh: f64,
    pub mean_cos: f64,
    #[serde(skip)]
    pub cov: DMatrix<f64>,
    pub purity: f64,
    pub squeezing_db: f64,
    pub eof_bits: f64,
    pub log_negativity: f64,
    pub probability: f64,
    /// Set when the parameters sit outside the small-noise validity regime.
    pub small_noise_warning: bool,
}

/// `⟨tanh r'⟩ ≈ (1 - v/2 - v/2n) tanh r`, clamped at zero.
/// The second return is a warning flag for `v` outside the small-noise
/// validity regime.
pub fn mean_tanh_rprime(r: f64, v: f64, n: usize) -> (f64, bool) {
    let factor = 1.0 - v / 2.0 - v / (2.0 * n as f64);
    ((factor * r.tanh()).max(0.0), v > SMALL_NOISE_LIMIT)
}

/// `⟨cos 2φ_β⟩ ≈ cos(2 sqrt(v/n))`.
pub fn mean_cos_2phibeta(v: f64, n: usize) -> f64 {
    (2.0 * (v / n as f64).sqrt()).cos()
}

/// Exact-Gaussian alternative `e^{-2v/n}`; agrees with
/// [`mean_cos_2phibeta`] to `O(v²/n²)`.
pub fn mean_cos_2phibeta_exact(v: f64, n: usize) -> f64 {
    (-2.0 * v / n as f64).exp()
}

/// Angle-average entering the `C` block under the chosen convention:
/// `cos(2 sqrt(v/n))` for `Paper`, `cos(sqrt(v/n))` for `Derived`.
pub fn mean_cos(v: f64, n: usize, convention: Convention) -> f64 {
    match convention {
        Convention::Paper => mean_cos_2phibeta(v, n),
        Convention::Derived => (v / n as f64).sqrt().cos(),
    }
}

/// Noise-averaged 4x4 covariance:
/// `A = B = a I`, `C = diag(c, -c)` with `a = (1 + t²)/(1 - t²)` and
/// `c = 2t/(1 - t²) ⟨cos Θ⟩`.
pub fn ensemble_covariance(r: f64, v: f64, n: usize, convention: Convention) -> DMatrix<f64> {
    let (t, _) = mean_tanh_rprime(r, v, n);
    let mc = mean_cos(v, n, convention);
    covariance_from_moments(t, mc)
}

fn covariance_from_moments(t: f64, mean_cos: f64) -> DMatrix<f64> {
    let a = (1.0 + t * t) / (1.0 - t * t);
    let c = 2.0 * t / (1.0 - t * t) * mean_cos;
    let mut cov = DMatrix::identity(4, 4) * a;
    cov[(0, 2)] = c;
    cov[(2, 0)] = c;
    cov[(1, 3)] = -c;
    cov[(3, 1)] = -c;
    cov
}

/// All channel metrics from the noise-averaged covariance; the ensemble
/// success probability is evaluated at `r̄' = atanh ⟨tanh r'⟩`.
pub fn ensemble_metrics(r: f64, v: f64, n: usize, convention: Convention) -> Result<EnsembleMetrics> {
    let (t, warn) = mean_tanh_rprime(r, v, n);
    let mc = mean_cos(v, n, convention);
    metrics_from_moments(r, t, mc, warn)
}

/// Large-`n` limit: `⟨tanh r'⟩ → (1 - v/2) tanh r`, `⟨cos Θ⟩ → 1`.
pub fn asymptotic_metrics(r: f64, v: f64) -> Result<EnsembleMetrics> {
    let t = ((1.0 - v / 2.0) * r.tanh()).max(0.0);
    metrics_from_moments(r, t, 1.0, v > SMALL_NOISE_LIMIT)
}

fn metrics_from_moments(r: f64, t: f64, mean_cos: f64, warn: bool) -> Result<EnsembleMetrics> {
    let cov = covariance_from_moments(t, mean_cos);
    let epr = crate::gaussian::QuadratureForm::epr_x();
    let state = gaussian::GaussianState::from_covariance(cov.clone())?;
    let variance = state.quadrature_variance(&epr)?;
    Ok(EnsembleMetrics {
        mean_tanh: t,
        mean_cos,
        purity: gaussian::purity(&cov),
        squeezing_db: gaussian::squeezing_db(variance),
        eof_bits: gaussian::eof_symmetric(&cov)?,
        log_negativity: gaussian::log_negativity(&cov)?,
        probability: success_probability(r, t.atanh())?,
        small_noise_warning: warn,
        cov,
    })
}
