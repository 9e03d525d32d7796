//! The unitary-averaging channel: balanced encode, per-mode stochastic
//! phases, balanced decode, vacuum heralding on the redundant modes.
//!
//! Every noise realization can be evaluated two independent ways: the closed
//! form in terms of the mean phasor, and the full Gaussian pipeline
//! (symplectic evolution plus Schur-complement heralding). Both must agree.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{tmsv_covariance_matrix, GaussianState, SymplecticMatrix};

/// Correlation-angle convention for the output covariance.
///
/// The printed covariance uses `Θ = 2 φ_β`; a direct derivation of the
/// second moments of the heralded state gives `Θ = φ_β`. Both are available;
/// the Fock oracle singles out `Derived` as the physical one, while `Paper`
/// reproduces the published squeezing table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    #[default]
    Paper,
    Derived,
}

impl Convention {
    pub fn correlation_angle(self, phi_beta: f64) -> f64 {
        match self {
            Convention::Paper => 2.0 * phi_beta,
            Convention::Derived => phi_beta,
        }
    }
}

/// Channel parameters: redundancy `n`, input squeezing `r`, phase variance
/// `v` (radians squared), and the correlation-angle convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub n: usize,
    pub r: f64,
    pub v: f64,
    pub convention: Convention,
}

impl ChannelParams {
    pub fn new(n: usize, r: f64, v: f64, convention: Convention) -> Result<Self> {
        if n < 1 {
            return Err(Error::OutOfRange {
                name: "n",
                value: n as f64,
                expected: ">= 1",
            });
        }
        for (name, value) in [("r", r), ("v", v)] {
            if !value.is_finite() {
                return Err(Error::NonFinite { name, value });
            }
            if value < 0.0 {
                return Err(Error::OutOfRange {
                    name,
                    value,
                    expected: ">= 0",
                });
            }
        }
        Ok(Self { n, r, v, convention })
    }
}

/// One realization of the per-mode stochastic phases.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSample(pub Vec<f64>);

/// Mean-phasor summary of a phase realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanPhasor {
    /// Modulus of the mean phasor, in `[0, 1]`.
    pub alpha: f64,
    /// Argument of the mean phasor; 0 when degenerate.
    pub phi_beta: f64,
    /// Set when `alpha` is numerically zero and the phase is undefined.
    pub degenerate: bool,
}

/// One noise realization's channel output.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotOutcome {
    pub alpha: f64,
    pub phi_beta: f64,
    pub degenerate_phase: bool,
    /// Effective squeezing: `tanh r' = α tanh r`.
    pub r_prime: f64,
    /// Heralding probability `(cosh r' / cosh r)²`.
    pub probability: f64,
    /// Conditional 4x4 covariance of the surviving mode pair.
    pub cov: DMatrix<f64>,
}

/// Balanced `n x n` encoder: the normalized Hadamard matrix when `n` is a
/// power of two, the DFT matrix otherwise. In both cases the first column is
/// uniformly `1/sqrt(n)`, which is all the channel depends on.
pub fn balanced_splitter(n: usize) -> DMatrix<Complex<f64>> {
    assert!(n >= 1);
    if n.is_power_of_two() {
        let scale = 1.0 / (n as f64).sqrt();
        DMatrix::from_fn(n, n, |j, k| {
            let sign = if (j & k).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            Complex::new(sign * scale, 0.0)
        })
    } else {
        let scale = 1.0 / (n as f64).sqrt();
        DMatrix::from_fn(n, n, |j, k| {
            let phi = 2.0 * std::f64::consts::PI * (j * k) as f64 / n as f64;
            Complex::from_polar(scale, phi)
        })
    }
}

/// Draws the `n` per-mode phases from `Normal(0, v)`.
pub fn sample_phases(params: &ChannelParams, rng: &mut impl Rng) -> PhaseSample {
    if params.v == 0.0 {
        return PhaseSample(vec![0.0; params.n]);
    }
    let normal = Normal::new(0.0, params.v.sqrt()).expect("validated in ChannelParams::new");
    PhaseSample((0..params.n).map(|_| normal.sample(rng)).collect())
}

/// Modulus and argument of `(e^{iφ₁} + ... + e^{iφ_n}) / n`.
pub fn complex_mean(phases: &PhaseSample) -> MeanPhasor {
    assert!(!phases.0.is_empty(), "phase sample must be nonempty");
    let sum: Complex<f64> = phases.0.iter().map(|&p| Complex::from_polar(1.0, p)).sum();
    let mean = sum / phases.0.len() as f64;
    let alpha = mean.norm().min(1.0);
    if alpha < 1e-14 {
        MeanPhasor {
            alpha: 0.0,
            phi_beta: 0.0,
            degenerate: true,
        }
    } else {
        MeanPhasor {
            alpha,
            phi_beta: mean.arg(),
            degenerate: false,
        }
    }
}

/// `(cosh r' / cosh r)²` for `0 <= r' <= r`.
pub fn success_probability(r: f64, r_prime: f64) -> Result<f64> {
    if r_prime < 0.0 || r_prime > r + 1e-12 {
        return Err(Error::OutOfRange {
            name: "r_prime",
            value: r_prime,
            expected: "in [0, r]",
        });
    }
    Ok((r_prime.cosh() / r.cosh()).powi(2))
}

/// Closed-form channel output for one phase realization.
pub fn shot_closed_form(params: &ChannelParams, phases: &PhaseSample) -> ShotOutcome {
    let mp = complex_mean(phases);
    let t_prime = mp.alpha * params.r.tanh();
    let r_prime = t_prime.atanh();
    // (cosh r'/cosh r)² = (1 - tanh²r) / (1 - tanh²r')
    let probability = (1.0 - params.r.tanh().powi(2)) / (1.0 - t_prime * t_prime);
    let theta = params.convention.correlation_angle(mp.phi_beta);
    ShotOutcome {
        alpha: mp.alpha,
        phi_beta: mp.phi_beta,
        degenerate_phase: mp.degenerate,
        r_prime,
        probability,
        cov: tmsv_covariance_matrix(r_prime, theta),
    }
}

/// Full Gaussian pipeline for one phase realization: builds the
/// `(n+1)`-mode input `TMSV(r) ⊗ vacuum^{n-1}`, applies the quadrature
/// realization of `U = H† R(θ) H` to the interferometer modes, and heralds
/// the vacuum on the redundant modes.
pub fn shot_gaussian_path(params: &ChannelParams, phases: &PhaseSample) -> Result<ShotOutcome> {
    let n = params.n;
    if phases.0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: phases.0.len(),
        });
    }
    let h = balanced_splitter(n);
    let rot = DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            Complex::from_polar(1.0, phases.0[j])
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    let u = h.adjoint() * rot * &h;
    let s = SymplecticMatrix::from_passive(&u)?;

    let mut state = GaussianState::tmsv(params.r, 0.0)?;
    if n > 1 {
        state = state.tensor(&GaussianState::vacuum(n - 1));
    }
    let interferometer_modes: Vec<usize> = (1..=n).collect();
    let state = state.apply_symplectic(&s, &interferometer_modes)?;

    let (cond, probability) = if n > 1 {
        let measured: Vec<usize> = (2..=n).collect();
        state.herald_vacuum(&measured)?
    } else {
        (state, 1.0)
    };

    let mp = complex_mean(phases);
    Ok(ShotOutcome {
        alpha: mp.alpha,
        phi_beta: mp.phi_beta,
        degenerate_phase: mp.degenerate,
        r_prime: (mp.alpha * params.r.tanh()).atanh(),
        probability,
        cov: cond.cov().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn params(n: usize, r: f64, v: f64, conv: Convention) -> ChannelParams {
        ChannelParams::new(n, r, v, conv).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ChannelParams::new(0, 1.0, 0.1, Convention::Paper).is_err());
        assert!(ChannelParams::new(2, -1.0, 0.1, Convention::Paper).is_err());
        assert!(ChannelParams::new(2, 1.0, -0.1, Convention::Paper).is_err());
        assert!(ChannelParams::new(2, f64::NAN, 0.1, Convention::Paper).is_err());
    }

    #[test]
    fn splitter_small_cases() {
        let u1 = balanced_splitter(1);
        assert_relative_eq!(u1[(0, 0)].re, 1.0);
        let u2 = balanced_splitter(2);
        let h = 1.0 / 2f64.sqrt();
        assert_relative_eq!(u2[(0, 0)].re, h);
        assert_relative_eq!(u2[(0, 1)].re, h);
        assert_relative_eq!(u2[(1, 0)].re, h);
        assert_relative_eq!(u2[(1, 1)].re, -h);
    }

    #[test]
    fn splitter_unitary_and_uniform_first_column() {
        for n in 1..=8 {
            let u = balanced_splitter(n);
            let defect = (u.adjoint() * &u - DMatrix::identity(n, n))
                .map(|z| z.norm())
                .amax();
            assert!(defect < 1e-12, "n={n} defect={defect}");
            let expect = 1.0 / (n as f64).sqrt();
            for j in 0..n {
                assert_relative_eq!(u[(j, 0)].norm(), expect, epsilon = 1e-12);
                assert_relative_eq!(u[(0, j)].norm(), expect, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sample_phases_zero_variance_and_determinism() {
        let p = params(4, 1.0, 0.0, Convention::Paper);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert_eq!(sample_phases(&p, &mut rng).0, vec![0.0; 4]);

        let p = params(4, 1.0, 0.01, Convention::Paper);
        let a = sample_phases(&p, &mut ChaCha12Rng::seed_from_u64(7));
        let b = sample_phases(&p, &mut ChaCha12Rng::seed_from_u64(7));
        assert_eq!(a, b);
    }

    #[test]
    fn sample_phases_variance_is_consistent() {
        let p = params(1, 1.0, 0.01, Convention::Paper);
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let x = sample_phases(&p, &mut rng).0[0];
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        // stderr of a variance estimate is v sqrt(2/n)
        let se = 0.01 * (2.0 / n as f64).sqrt();
        assert!((var - 0.01).abs() < 3.0 * se, "var={var}");
    }

    #[test]
    fn complex_mean_examples() {
        let mp = complex_mean(&PhaseSample(vec![0.0, 0.0, 0.0]));
        assert_relative_eq!(mp.alpha, 1.0, epsilon = 1e-14);
        assert_relative_eq!(mp.phi_beta, 0.0, epsilon = 1e-14);
        assert!(!mp.degenerate);

        let mp = complex_mean(&PhaseSample(vec![
            std::f64::consts::FRAC_PI_2,
            -std::f64::consts::FRAC_PI_2,
        ]));
        assert_eq!(mp.alpha, 0.0);
        assert!(mp.degenerate);
        assert_eq!(mp.phi_beta, 0.0);

        let mp = complex_mean(&PhaseSample(vec![0.0, std::f64::consts::FRAC_PI_2]));
        assert_relative_eq!(mp.alpha, 0.70711, epsilon = 1e-5);
        assert_relative_eq!(mp.phi_beta, 0.78540, epsilon = 1e-5);
    }

    #[test]
    fn success_probability_examples() {
        assert_relative_eq!(success_probability(1.2, 1.2).unwrap(), 1.0);
        assert_relative_eq!(success_probability(1.2, 0.0).unwrap(), 0.30502, epsilon = 1e-5);
        assert!(success_probability(1.0, 1.1).is_err());
        assert!(success_probability(1.0, -0.1).is_err());
    }

    #[test]
    fn closed_form_zero_phases_is_identity_channel() {
        let p = params(3, 1.2, 0.0, Convention::Paper);
        let out = shot_closed_form(&p, &PhaseSample(vec![0.0; 3]));
        assert_relative_eq!(out.probability, 1.0, epsilon = 1e-12);
        assert_relative_eq!(&out.cov, &tmsv_covariance_matrix(1.2, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn closed_form_antipodal_phases_gives_vacuum() {
        let p = params(2, 1.2, 0.0, Convention::Paper);
        let out = shot_closed_form(&p, &PhaseSample(vec![0.0, std::f64::consts::PI]));
        assert!(out.degenerate_phase);
        assert_relative_eq!(out.probability, 0.30502, epsilon = 1e-5);
        assert_relative_eq!(&out.cov, &DMatrix::identity(4, 4), epsilon = 1e-12);
    }

    #[test]
    fn closed_form_single_mode_angle_per_convention() {
        let theta = 0.4;
        let phases = PhaseSample(vec![theta]);
        let paper = shot_closed_form(&params(1, 1.2, 0.0, Convention::Paper), &phases);
        let derived = shot_closed_form(&params(1, 1.2, 0.0, Convention::Derived), &phases);
        assert_relative_eq!(paper.probability, 1.0, epsilon = 1e-12);
        let s = 2.4f64.sinh();
        assert_relative_eq!(paper.cov[(0, 2)], s * (2.0 * theta).cos(), epsilon = 1e-12);
        assert_relative_eq!(derived.cov[(0, 2)], s * theta.cos(), epsilon = 1e-12);
    }

    #[test]
    fn shot_invariants_per_realization() {
        let p = params(3, 1.0, 0.05, Convention::Derived);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..50 {
            let phases = sample_phases(&p, &mut rng);
            let out = shot_closed_form(&p, &phases);
            assert_relative_eq!(
                out.r_prime.tanh(),
                out.alpha * p.r.tanh(),
                epsilon = 1e-12
            );
            assert_relative_eq!(
                out.probability,
                (out.r_prime.cosh() / p.r.cosh()).powi(2),
                epsilon = 1e-10
            );
            // per-shot conditional state is pure
            assert_relative_eq!(crate::gaussian::purity(&out.cov), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn gaussian_path_identity_cases() {
        let p = params(1, 1.2, 0.0, Convention::Derived);
        let out = shot_gaussian_path(&p, &PhaseSample(vec![0.0])).unwrap();
        assert_relative_eq!(out.probability, 1.0, epsilon = 1e-12);
        assert_relative_eq!(&out.cov, &tmsv_covariance_matrix(1.2, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn gaussian_path_antipodal_phases() {
        let p = params(2, 1.2, 0.0, Convention::Derived);
        let out = shot_gaussian_path(&p, &PhaseSample(vec![0.0, std::f64::consts::PI])).unwrap();
        assert_relative_eq!(out.probability, 0.30502, epsilon = 1e-5);
        assert_relative_eq!(&out.cov, &DMatrix::identity(4, 4), epsilon = 1e-8);
    }

    #[test]
    fn path_equivalence_small_sample() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for n in 1..=4 {
            let p = params(n, 1.0, 0.05, Convention::Derived);
            for _ in 0..20 {
                let phases = sample_phases(&p, &mut rng);
                let a = shot_closed_form(&p, &phases);
                let b = shot_gaussian_path(&p, &phases).unwrap();
                assert!((a.probability - b.probability).abs() < 1e-9);
                assert!((&a.cov - &b.cov).amax() < 1e-8, "n={n}");
            }
        }
    }

    #[test]
    fn global_phase_shift_invariance() {
        let p = params(3, 1.1, 0.02, Convention::Derived);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let phases = sample_phases(&p, &mut rng);
        let shift = 0.37;
        let shifted = PhaseSample(phases.0.iter().map(|t| t + shift).collect());
        let a = shot_closed_form(&p, &phases);
        let b = shot_closed_form(&p, &shifted);
        assert_relative_eq!(a.alpha, b.alpha, epsilon = 1e-12);
        assert_relative_eq!(a.r_prime, b.r_prime, epsilon = 1e-12);
        assert_relative_eq!(a.probability, b.probability, epsilon = 1e-12);
        assert_relative_eq!(b.phi_beta, a.phi_beta + shift, epsilon = 1e-12);
    }

    #[test]
    fn probability_monotone_in_alpha() {
        let r = 1.2f64;
        let mut last = -1.0;
        for i in 0..=20 {
            let alpha = i as f64 / 20.0;
            let rp = (alpha * r.tanh()).atanh();
            let p = success_probability(r, rp).unwrap();
            assert!(p > last);
            last = p;
        }
        assert_relative_eq!(last, 1.0, epsilon = 1e-12);
    }
}
