//! Acceptance gate: one test per shipped criterion, each printing a single
//! pass/fail line.
//!
//! Two criteria intentionally pin published reference values that a
//! first-principles computation does not reproduce (a misprinted table row
//! and a sign slip in a published probability expansion). Those tests are
//! left failing rather than weakened; see the README and the tracking notes
//! in each test body.

use nalgebra::{Complex, DMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use uasim::analytic::{asymptotic_metrics, ensemble_metrics};
use uasim::channel::{
    balanced_splitter, sample_phases, shot_closed_form, shot_gaussian_path, ChannelParams,
    Convention, PhaseSample,
};
use uasim::config::r_to_db;
use uasim::fock::{heralded_fock_channel, moments_to_covariance};
use uasim::gaussian::{GaussianState, SymplecticMatrix};
use uasim::montecarlo::{
    metric_uncertainty, metrics_from_ensemble, run_ensemble, Weighting,
};
use uasim::report::{TABLE1_INPUT_DB, TABLE1_N1_DB, TABLE1_N5_DB, TABLE1_R};

fn verdict(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_1_input_column() {
    // The reference input column is 10 log10 e^{2r} for each r. Four of the
    // five printed rows match to well under 0.01 dB; the r = 1.5 row prints
    // 12.03 dB where the formula gives 13.03 dB, which no dB convention
    // reproduces while keeping the other four rows. The pinned value is kept
    // and this criterion fails on that single row.
    let mut worst = (0.0f64, 0.0f64);
    for (i, &r) in TABLE1_R.iter().enumerate() {
        let dev = (r_to_db(r) - TABLE1_INPUT_DB[i]).abs();
        if dev > worst.1 {
            worst = (r, dev);
        }
    }
    verdict(
        "1 (input squeezing column, +-0.01 dB)",
        worst.1 <= 0.01,
        &format!("worst row r={} dev={:.4} dB", worst.0, worst.1),
    );
}

#[test]
fn criterion_2_n5_column_and_variance_fit() {
    // 1-D fit of the phase variance against the n=1 column before freezing
    let grid: Vec<f64> = (4..=60).map(|k| k as f64 * 0.0005).collect();
    let objective = |v: f64| -> f64 {
        TABLE1_R
            .iter()
            .zip(TABLE1_N1_DB.iter())
            .map(|(&r, &printed)| {
                let m = ensemble_metrics(r, v, 1, Convention::Paper).unwrap();
                (m.squeezing_db - printed).powi(2)
            })
            .sum()
    };
    let v_star = grid
        .iter()
        .copied()
        .min_by(|a, b| objective(*a).partial_cmp(&objective(*b)).unwrap())
        .unwrap();
    let fit_ok = (0.008..=0.013).contains(&v_star);

    let mut worst = (0.0f64, 0.0f64);
    let mut ok = true;
    for (i, &r) in TABLE1_R.iter().enumerate() {
        let m = ensemble_metrics(r, 0.01, 5, Convention::Paper).unwrap();
        let dev = (m.squeezing_db - TABLE1_N5_DB[i]).abs();
        let tol = if r <= 1.5 { 0.05 } else { 0.4 };
        ok &= dev <= tol;
        if dev > worst.1 {
            worst = (r, dev);
        }
    }
    verdict(
        "2 (n=5 column at fitted v=0.01)",
        ok && fit_ok,
        &format!("v*={v_star:.4}, worst row r={} dev={:.4} dB", worst.0, worst.1),
    );
}

#[test]
fn criterion_3_n1_column() {
    let mut ok = true;
    let mut worst = (0.0f64, 0.0f64);
    for (i, &r) in TABLE1_R.iter().enumerate() {
        let m = ensemble_metrics(r, 0.01, 1, Convention::Paper).unwrap();
        let dev = (m.squeezing_db - TABLE1_N1_DB[i]).abs();
        // the r=2 row sits outside the small-noise regime and is tracked
        // loosely rather than regressed tightly
        let tol = if r <= 1.5 { 0.25 } else { 1.0 };
        ok &= dev <= tol;
        if dev > worst.1 {
            worst = (r, dev);
        }
    }
    verdict(
        "3 (n=1 column at v=0.01)",
        ok,
        &format!("worst row r={} dev={:.4} dB", worst.0, worst.1),
    );
}

#[test]
fn criterion_4_heralding_probability() {
    let p2 = ensemble_metrics(1.2, 0.01, 2, Convention::Paper)
        .unwrap()
        .probability;
    let near_floor = (p2 - 0.968).abs() <= 0.005;

    let mut nondecreasing = true;
    let mut last = 0.0;
    for n in 1..=50 {
        let p = ensemble_metrics(1.2, 0.01, n, Convention::Paper)
            .unwrap()
            .probability;
        nondecreasing &= p >= last - 1e-12;
        last = p;
    }

    let p_inf = asymptotic_metrics(1.2, 0.01).unwrap().probability;
    let limit_ok = (p_inf - 0.978).abs() <= 0.001 && p_inf > 0.0;

    verdict(
        "4 (heralding probability)",
        near_floor && nondecreasing && limit_ok,
        &format!("P(n=2)={p2:.4}, P(inf)={p_inf:.4}"),
    );
}

#[test]
fn criterion_5_oracle_equivalence() {
    let mut max_cov: f64 = 0.0;
    let mut max_p: f64 = 0.0;
    for n in 1..=4usize {
        let params = ChannelParams::new(n, 1.2, 0.01, Convention::Derived).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2024 + n as u64);
        for _ in 0..200 {
            let phases = sample_phases(&params, &mut rng);
            let a = shot_closed_form(&params, &phases);
            let b = shot_gaussian_path(&params, &phases).unwrap();
            max_cov = max_cov.max((&a.cov - &b.cov).amax());
            max_p = max_p.max((a.probability - b.probability).abs());
        }
    }
    let gaussian_ok = max_cov <= 1e-8 && max_p <= 1e-9;

    let mut max_fock: f64 = 0.0;
    for n in [2usize, 3] {
        let params = ChannelParams::new(n, 0.5, 0.01, Convention::Derived).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(7 + n as u64);
        for _ in 0..10 {
            let phases = sample_phases(&params, &mut rng);
            let fock = heralded_fock_channel(0.5, &phases, 12).unwrap();
            let cov = moments_to_covariance(&fock).unwrap();
            let shot = shot_gaussian_path(&params, &phases).unwrap();
            max_fock = max_fock.max((&cov - &shot.cov).amax());
        }
    }
    let fock_ok = max_fock <= 1e-5;

    verdict(
        "5 (oracle equivalence)",
        gaussian_ok && fock_ok,
        &format!("cov dev {max_cov:.2e}, prob dev {max_p:.2e}, fock dev {max_fock:.2e}"),
    );
}

#[test]
fn criterion_6_noiseless_identities() {
    let m = ensemble_metrics(1.2, 0.0, 4, Convention::Paper).unwrap();
    let ok = (m.purity - 1.0).abs() <= 1e-9
        && (m.probability - 1.0).abs() <= 1e-9
        && (m.eof_bits - 2.909).abs() <= 5e-4;
    verdict(
        "6 (noiseless identities)",
        ok,
        &format!(
            "purity={:.12}, P={:.12}, EoF={:.5} bits",
            m.purity, m.probability, m.eof_bits
        ),
    );
}

#[test]
fn criterion_7_monotonicity_in_n() {
    let mut ok = true;
    let mut culprit = String::new();
    for v in [0.005, 0.01, 0.05] {
        let mut last = (f64::MIN, f64::MIN, f64::MIN);
        for n in 1..=40 {
            let m = ensemble_metrics(1.2, v, n, Convention::Paper).unwrap();
            let now = (m.squeezing_db, m.purity, m.eof_bits);
            if now.0 < last.0 - 1e-10 || now.1 < last.1 - 1e-10 || now.2 < last.2 - 1e-10 {
                ok = false;
                culprit = format!("v={v}, n={n}");
            }
            last = now;
        }
    }
    verdict(
        "7 (monotonicity in n)",
        ok,
        if culprit.is_empty() { "squeezing, purity, EoF all nondecreasing" } else { &culprit },
    );
}

/// Channel pipeline with a uniform loss stage inserted either on the input
/// pair (before encoding) or on all modes after the interferometer, just
/// before heralding.
fn lossy_pipeline(
    n: usize,
    r: f64,
    phases: &PhaseSample,
    gamma: f64,
    loss_first: bool,
) -> DMatrix<f64> {
    let h = balanced_splitter(n);
    let rot = DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            Complex::from_polar(1.0, phases.0[j])
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    let u = h.adjoint() * rot * &h;
    let s = SymplecticMatrix::from_passive(&u).unwrap();

    let mut state = GaussianState::tmsv(r, 0.0).unwrap();
    if loss_first {
        state = state.apply_uniform_loss(gamma).unwrap();
    }
    state = state.tensor(&GaussianState::vacuum(n - 1));
    let modes: Vec<usize> = (1..=n).collect();
    state = state.apply_symplectic(&s, &modes).unwrap();
    if !loss_first {
        state = state.apply_uniform_loss(gamma).unwrap();
    }
    let measured: Vec<usize> = (2..=n).collect();
    let (cond, _) = state.herald_vacuum(&measured).unwrap();
    cond.cov().clone()
}

#[test]
fn criterion_8_loss_commutation() {
    let mut max_dev: f64 = 0.0;
    for n in [2usize, 3] {
        for gamma in [0.05, 0.2] {
            let params = ChannelParams::new(n, 1.2, 0.01, Convention::Derived).unwrap();
            let mut rng = ChaCha12Rng::seed_from_u64(500 + n as u64);
            for _ in 0..20 {
                let phases = sample_phases(&params, &mut rng);
                let a = lossy_pipeline(n, 1.2, &phases, gamma, true);
                let b = lossy_pipeline(n, 1.2, &phases, gamma, false);
                max_dev = max_dev.max((&a - &b).amax());
            }
        }
    }
    verdict(
        "8 (loss commutation)",
        max_dev <= 1e-8,
        &format!("max conditional-covariance deviation {max_dev:.2e}"),
    );
}

#[test]
fn criterion_9a_monte_carlo_vs_analytic() {
    // The analytic success probability uses the mean-modulus expansion
    // 1 - v/2 - v/2n; direct evaluation of the same expectation gives
    // 1 - v/2 + v/2n (at n = 1 the modulus is exactly 1, so P must be 1,
    // which the printed expansion misses). At 10^5 shots the resulting bias
    // is far outside 3 standard errors for the probability (and for purity
    // at small n), so this sub-criterion fails. The pinned
    // expansion is kept; the bias is documented, not patched over.
    let mut ok = true;
    let mut report = Vec::new();
    for (n, v) in [(2usize, 0.01), (2, 0.02), (5, 0.01), (5, 0.02)] {
        let params = ChannelParams::new(n, 1.2, v, Convention::Paper).unwrap();
        let stats = run_ensemble(&params, 100_000, 4242);
        let (mc, _) = metrics_from_ensemble(&stats, Weighting::Unweighted).unwrap();
        let u = metric_uncertainty(&stats, Weighting::Unweighted).unwrap();
        let an = ensemble_metrics(1.2, v, n, Convention::Paper).unwrap();
        let pairs = [
            ("squeezing", mc.squeezing_db, an.squeezing_db, u.squeezing_db),
            ("purity", mc.purity, an.purity, u.purity),
            ("eof", mc.eof_bits, an.eof_bits, u.eof_bits),
            ("logneg", mc.log_negativity, an.log_negativity, u.log_negativity),
            ("probability", mc.probability, an.probability, u.probability),
        ];
        for (name, got, want, se) in pairs {
            let z = (got - want).abs() / se.max(1e-12);
            if z > 3.0 {
                ok = false;
                report.push(format!("n={n} v={v} {name}: z={z:.1}"));
            }
        }
    }
    verdict(
        "9a (Monte Carlo within 3 standard errors of analytic)",
        ok,
        &if report.is_empty() {
            "all metrics within 3 standard errors".to_string()
        } else {
            report.join("; ")
        },
    );
}

#[test]
fn criterion_9b_stderr_scaling() {
    let params = ChannelParams::new(5, 1.2, 0.01, Convention::Paper).unwrap();
    let small = run_ensemble(&params, 1_000, 77);
    let large = run_ensemble(&params, 100_000, 77);
    let ratio_cov = small.stderr_cov.amax() / large.stderr_cov.amax();
    let ratio_p = small.stderr_probability / large.stderr_probability;
    // ideal sqrt(100) = 10 for a 100x shot increase, within factor 1.5
    let ok = (10.0 / 1.5..=10.0 * 1.5).contains(&ratio_cov)
        && (10.0 / 1.5..=10.0 * 1.5).contains(&ratio_p);
    verdict(
        "9b (standard error scales as 1/sqrt(shots))",
        ok,
        &format!("cov ratio {ratio_cov:.2}, probability ratio {ratio_p:.2} (ideal 10)"),
    );
}
