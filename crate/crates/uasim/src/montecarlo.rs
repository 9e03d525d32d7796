//! Shot-ensemble engine: sample phases, collect per-shot conditional
//! covariances and heralding probabilities, average, and attach uncertainty
//! estimates.
//!
//! Each shot draws from its own counter-keyed RNG stream, so results are a
//! pure function of `(params, shots, seed)` no matter how the work is split
//! across threads.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::EnsembleMetrics;
use crate::channel::{sample_phases, shot_closed_form, ChannelParams};
use crate::error::Result;
use crate::gaussian::{self, PHYSICALITY_TOL};

/// Which averaged covariance feeds the metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Plain average of per-shot covariances.
    #[default]
    Unweighted,
    /// Per-shot heralding probabilities as weights: the post-selected
    /// ensemble an experiment would actually observe.
    Heralded,
}

/// Shot-averaged ensemble statistics.
#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub shots: usize,
    pub seed: u64,
    pub mean_cov_unweighted: DMatrix<f64>,
    pub mean_cov_weighted: DMatrix<f64>,
    /// Elementwise standard errors of the unweighted covariance mean.
    pub stderr_cov: DMatrix<f64>,
    pub mean_probability: f64,
    pub stderr_probability: f64,
    pub mean_tanh: f64,
    pub mean_cos: f64,
}

/// Heuristic one-sigma uncertainties for the derived metrics, obtained by
/// re-evaluating each metric at directionally perturbed covariances
/// (`cov ± stderr`, signs chosen to widen the bracket).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricUncertainty {
    pub squeezing_db: f64,
    pub purity: f64,
    pub eof_bits: f64,
    pub log_negativity: f64,
    pub probability: f64,
}

/// Runs `shots` independent noise realizations of the channel.
///
/// Mixing per-shot covariances by plain averaging is valid because every
/// shot is zero-mean. Deterministic for fixed `(params, shots, seed)`.
pub fn run_ensemble(params: &ChannelParams, shots: usize, seed: u64) -> EnsembleStats {
    assert!(shots >= 1);
    // Per-shot results are materialized in shot order so the reduction below
    // is a fixed-order sequential sum regardless of thread count.
    let per_shot: Vec<(DMatrix<f64>, f64, f64, f64)> = (0..shots as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let phases = sample_phases(params, &mut rng);
            let out = shot_closed_form(params, &phases);
            let cos_theta = params.convention.correlation_angle(out.phi_beta).cos();
            (out.cov, out.probability, out.r_prime.tanh(), cos_theta)
        })
        .collect();

    let mut sum = DMatrix::zeros(4, 4);
    let mut sum_sq = DMatrix::zeros(4, 4);
    let mut sum_weighted = DMatrix::zeros(4, 4);
    let mut sum_p = 0.0;
    let mut sum_p_sq = 0.0;
    let mut sum_tanh = 0.0;
    let mut sum_cos = 0.0;
    for (cov, p, tanh_rp, cos_theta) in &per_shot {
        sum += cov;
        sum_sq += cov.map(|x| x * x);
        sum_weighted += cov * *p;
        sum_p += p;
        sum_p_sq += p * p;
        sum_tanh += tanh_rp;
        sum_cos += cos_theta;
    }
    let n = shots as f64;
    let mean = &sum / n;
    let var = (&sum_sq / n - mean.map(|x| x * x)).map(|x| x.max(0.0));
    let stderr_cov = var.map(|x| (x / n).sqrt());
    let mean_p = sum_p / n;
    let var_p = (sum_p_sq / n - mean_p * mean_p).max(0.0);
    EnsembleStats {
        shots,
        seed,
        mean_cov_unweighted: mean,
        mean_cov_weighted: &sum_weighted / sum_p,
        stderr_cov,
        mean_probability: mean_p,
        stderr_probability: (var_p / n).sqrt(),
        mean_tanh: sum_tanh / n,
        mean_cos: sum_cos / n,
    }
}

/// Derives channel metrics from the selected averaged covariance.
///
/// Returns the metrics together with a flag that is set when the averaged
/// covariance dipped below the uncertainty bound (possible only through
/// sampling noise) and was rescaled onto the nearest physical state.
pub fn metrics_from_ensemble(
    stats: &EnsembleStats,
    weighting: Weighting,
) -> Result<(EnsembleMetrics, bool)> {
    let cov = match weighting {
        Weighting::Unweighted => stats.mean_cov_unweighted.clone(),
        Weighting::Heralded => stats.mean_cov_weighted.clone(),
    };
    let (cov, clipped) = clip_physical(cov);
    let epr_variance = (cov[(0, 0)] + cov[(2, 2)] - 2.0 * cov[(0, 2)]) / 2.0;
    Ok((
        EnsembleMetrics {
            mean_tanh: stats.mean_tanh,
            mean_cos: stats.mean_cos,
            purity: gaussian::purity(&cov),
            squeezing_db: gaussian::squeezing_db(epr_variance),
            eof_bits: gaussian::eof_symmetric(&cov)?,
            log_negativity: gaussian::log_negativity(&cov)?,
            probability: stats.mean_probability,
            small_noise_warning: false,
            cov,
        },
        clipped,
    ))
}

fn clip_physical(cov: DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let nu_min = gaussian::symplectic_eigenvalues(&cov)
        .first()
        .copied()
        .unwrap_or(f64::NAN);
    if nu_min >= 1.0 - PHYSICALITY_TOL {
        (cov, false)
    } else {
        // Rescaling lifts every symplectic eigenvalue onto or above 1.
        (cov / nu_min, true)
    }
}

/// Metric uncertainties by recomputation at perturbed covariances: each
/// covariance entry is shifted by one standard error in the direction that
/// moves the metric, diagonal blocks against the correlation block. A cheap
/// bracket, not a rigorous error bar.
pub fn metric_uncertainty(stats: &EnsembleStats, weighting: Weighting) -> Result<MetricUncertainty> {
    let cov = match weighting {
        Weighting::Unweighted => &stats.mean_cov_unweighted,
        Weighting::Heralded => &stats.mean_cov_weighted,
    };
    let mut direction = stats.stderr_cov.clone();
    for i in 0..4 {
        for j in 0..4 {
            // opposite sign on the off-diagonal (C) block, aligned with the
            // sign of the correlation it perturbs
            if (i < 2) != (j < 2) {
                direction[(i, j)] = -direction[(i, j)] * cov[(i, j)].signum();
            }
        }
    }
    let plus = clip_physical(cov + &direction).0;
    let minus = clip_physical(cov - &direction).0;
    let spread = |f: &dyn Fn(&DMatrix<f64>) -> f64| (f(&plus) - f(&minus)).abs() / 2.0;
    let epr = |c: &DMatrix<f64>| (c[(0, 0)] + c[(2, 2)] - 2.0 * c[(0, 2)]) / 2.0;
    Ok(MetricUncertainty {
        squeezing_db: spread(&|c| gaussian::squeezing_db(epr(c))),
        purity: spread(&gaussian::purity),
        eof_bits: spread(&|c| {
            gaussian::eof_from_nu(gaussian::ppt_min_symplectic_eigenvalue(c).unwrap_or(1.0))
        }),
        log_negativity: spread(&|c| gaussian::log_negativity(c).unwrap_or(0.0)),
        probability: stats.stderr_probability,
    })
}

/// One rung of the convergence ladder.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub shots: usize,
    pub stderr_cov_max: f64,
    pub stderr_probability: f64,
    pub squeezing_db: f64,
}

/// Runs the shot ladder and reports how the standard errors shrink.
pub fn convergence_report(
    params: &ChannelParams,
    ladder: &[usize],
    seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    ladder
        .iter()
        .map(|&shots| {
            let stats = run_ensemble(params, shots, seed);
            let (metrics, _) = metrics_from_ensemble(&stats, Weighting::Unweighted)?;
            Ok(ConvergenceRow {
                shots,
                stderr_cov_max: stats.stderr_cov.amax(),
                stderr_probability: stats.stderr_probability,
                squeezing_db: metrics.squeezing_db,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Convention;
    use crate::gaussian::tmsv_covariance_matrix;
    use approx::assert_relative_eq;

    fn params(n: usize, v: f64) -> ChannelParams {
        ChannelParams::new(n, 1.2, v, Convention::Paper).unwrap()
    }

    #[test]
    fn noiseless_ensemble_is_exact_tmsv() {
        let stats = run_ensemble(&params(3, 0.0), 200, 1);
        assert_relative_eq!(
            &stats.mean_cov_unweighted,
            &tmsv_covariance_matrix(1.2, 0.0),
            epsilon = 1e-12
        );
        assert_eq!(stats.stderr_cov.amax(), 0.0);
        assert_relative_eq!(stats.mean_probability, 1.0, epsilon = 1e-12);
        let (m, clipped) = metrics_from_ensemble(&stats, Weighting::Unweighted).unwrap();
        assert!(!clipped);
        assert_relative_eq!(m.purity, 1.0, epsilon = 1e-9);
        assert_relative_eq!(m.eof_bits, 2.909, epsilon = 1e-3);
    }

    #[test]
    fn deterministic_across_thread_pools() {
        let p = params(4, 0.01);
        let a = run_ensemble(&p, 2000, 99);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = single.install(|| run_ensemble(&p, 2000, 99));
        assert_eq!(a.mean_cov_unweighted, b.mean_cov_unweighted);
        assert_eq!(a.mean_cov_weighted, b.mean_cov_weighted);
        assert_eq!(a.mean_probability, b.mean_probability);
        assert_eq!(a.stderr_cov, b.stderr_cov);
    }

    #[test]
    fn squeezing_near_analytic_at_small_noise() {
        let stats = run_ensemble(&params(5, 0.01), 100_000, 7);
        let (m, _) = metrics_from_ensemble(&stats, Weighting::Unweighted).unwrap();
        assert!((m.squeezing_db - 9.40).abs() < 0.1, "sq={}", m.squeezing_db);
    }

    #[test]
    fn n1_squeezing_matches_exact_expectation() {
        // At n = 1 the averaged C entry is exactly sinh(2r) e^{-2v} under the
        // printed 2φ_β convention.
        let stats = run_ensemble(&params(1, 0.01), 100_000, 13);
        let (m, _) = metrics_from_ensemble(&stats, Weighting::Unweighted).unwrap();
        let exact = 2.4f64.cosh() - 2.4f64.sinh() * (-0.02f64).exp();
        let expect = crate::gaussian::squeezing_db(exact);
        assert_relative_eq!(expect, 7.0128, epsilon = 1e-3);
        assert!((m.squeezing_db - expect).abs() < 0.15, "sq={}", m.squeezing_db);
    }

    #[test]
    fn weighted_close_to_unweighted_at_small_noise() {
        let stats = run_ensemble(&params(5, 0.01), 20_000, 3);
        for i in 0..4 {
            for j in 0..4 {
                let u = stats.mean_cov_unweighted[(i, j)];
                let w = stats.mean_cov_weighted[(i, j)];
                assert!((u - w).abs() <= 0.005 * u.abs().max(1.0), "({i},{j})");
            }
        }
    }

    #[test]
    fn mixture_of_pure_shots_is_physical() {
        for (n, v) in [(1, 0.05), (2, 0.01), (5, 0.2)] {
            let stats = run_ensemble(&params(n, v), 5_000, 17);
            let nus = gaussian::symplectic_eigenvalues(&stats.mean_cov_unweighted);
            assert!(nus[0] >= 1.0 - 1e-9, "n={n} v={v} nu={}", nus[0]);
        }
    }

    #[test]
    fn convergence_ladder_scaling() {
        let p = params(5, 0.01);
        let rows = convergence_report(&p, &[1_000, 10_000, 100_000], 5).unwrap();
        let ratio = rows[0].stderr_cov_max / rows[2].stderr_cov_max;
        // ideal sqrt(100) = 10, accept within factor 1.5
        assert!((6.7..=15.0).contains(&ratio), "ratio={ratio}");

        // v = 0: identical shots, standard error vanishes up to round-off
        let zero = convergence_report(&params(2, 0.0), &[1_000, 10_000], 5).unwrap();
        assert!(zero.iter().all(|r| r.stderr_cov_max < 1e-7));

        let again = convergence_report(&p, &[1_000, 10_000, 100_000], 5).unwrap();
        assert_eq!(rows[1].squeezing_db, again[1].squeezing_db);
    }

    #[test]
    fn clipping_flags_unphysical_average() {
        let mut stats = run_ensemble(&params(2, 0.01), 100, 1);
        stats.mean_cov_unweighted *= 0.5; // force a violation
        let (m, clipped) = metrics_from_ensemble(&stats, Weighting::Unweighted).unwrap();
        assert!(clipped);
        let nus = gaussian::symplectic_eigenvalues(&m.cov);
        assert!(nus[0] >= 1.0 - 1e-9);
    }

    #[test]
    fn uncertainty_bracket_is_finite_and_positive() {
        let stats = run_ensemble(&params(5, 0.01), 5_000, 23);
        let u = metric_uncertainty(&stats, Weighting::Unweighted).unwrap();
        assert!(u.squeezing_db > 0.0 && u.squeezing_db.is_finite());
        assert!(u.purity > 0.0 && u.purity.is_finite());
        assert!(u.eof_bits > 0.0 && u.eof_bits.is_finite());
        assert!(u.probability > 0.0);
    }
}
