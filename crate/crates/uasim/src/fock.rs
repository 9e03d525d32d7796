//! Brute-force truncated Fock-space oracle.
//!
//! Everything here is independent of the Gaussian formalism: states are
//! explicit amplitude maps over occupation tuples, passive optics is exact
//! per photon-number sector, and covariances are recovered from ladder-operator
//! moments. The Gaussian pipeline is checked against this module, never the
//! other way around.

use std::collections::BTreeMap;

use nalgebra::{Complex, DMatrix};

use crate::channel::{balanced_splitter, PhaseSample};
use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Hard caps for exact multimode evolution.
const MAX_MODES: usize = 4;
const MAX_TOTAL_PHOTONS: usize = 12;

/// Truncated Fock-basis state: complex amplitudes over occupation tuples.
/// Sub-normalized after heralding; the squared norm carries the heralding
/// probability.
#[derive(Debug, Clone, PartialEq)]
pub struct FockAmplitudes {
    modes: usize,
    cutoff: usize,
    amps: BTreeMap<Vec<u8>, C64>,
}

impl FockAmplitudes {
    pub fn new(modes: usize, cutoff: usize) -> Self {
        Self {
            modes,
            cutoff,
            amps: BTreeMap::new(),
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn set(&mut self, occ: &[u8], amp: C64) {
        assert_eq!(occ.len(), self.modes);
        if amp != C64::new(0.0, 0.0) {
            self.amps.insert(occ.to_vec(), amp);
        }
    }

    pub fn amp(&self, occ: &[u8]) -> C64 {
        self.amps.get(occ).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn norm_squared(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u8>, &C64)> {
        self.amps.iter()
    }
}

/// Geometric truncation tail `tanh^{2(cutoff+1)} r / (1 - tanh² r)`: the
/// probability mass of the squeezing ladder above the cutoff.
pub fn tail_bound(r: f64, cutoff: usize) -> f64 {
    let t2 = r.tanh().powi(2);
    t2.powi(cutoff as i32 + 1) / (1.0 - t2)
}

/// Two-mode squeezed vacuum on the diagonal ladder:
/// `amp(N, N) = tanh^N r / cosh r`.
pub fn tmsv_amplitudes(r: f64, cutoff: usize) -> FockAmplitudes {
    let mut state = FockAmplitudes::new(2, cutoff);
    let lambda = r.tanh();
    let mut coeff = 1.0 / r.cosh();
    for n in 0..=cutoff {
        state.set(&[n as u8, n as u8], C64::new(coeff, 0.0));
        coeff *= lambda;
    }
    state
}

/// Heralded output ladder straight from the averaged phasor:
/// `amp(N, N) = (m tanh r)^N / cosh r` with `m` the mean phasor of the
/// phases. The squared norm is the heralding probability.
pub fn heralded_closed_form_amplitudes(r: f64, phases: &PhaseSample, cutoff: usize) -> FockAmplitudes {
    let n = phases.0.len() as f64;
    let m: C64 = phases
        .0
        .iter()
        .map(|&p| C64::from_polar(1.0, p))
        .sum::<C64>()
        / n;
    let lambda = m * r.tanh();
    let mut state = FockAmplitudes::new(2, cutoff);
    let mut coeff = C64::new(1.0 / r.cosh(), 0.0);
    for k in 0..=cutoff {
        state.set(&[k as u8, k as u8], coeff);
        coeff *= lambda;
    }
    state
}

fn factorial(n: u8) -> f64 {
    (1..=n as u64).product::<u64>() as f64
}

/// Exact passive evolution `a†_j -> Σ_k U_kj a†_k`, photon-number conserving
/// and unitary on every fixed-number sector. Desk-scale only: at most
/// 4 modes and 8 photons per basis state.
pub fn fock_linear_optics(state: &FockAmplitudes, u: &DMatrix<C64>) -> Result<FockAmplitudes> {
    let m = state.modes;
    if u.nrows() != m || u.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: u.nrows(),
        });
    }
    if m > MAX_MODES {
        return Err(Error::SizeLimit(format!("{m} modes exceeds limit {MAX_MODES}")));
    }
    let mut out = FockAmplitudes::new(m, state.cutoff);
    for (occ, &amp) in state.iter() {
        let total: usize = occ.iter().map(|&x| x as usize).sum();
        if total > MAX_TOTAL_PHOTONS {
            return Err(Error::SizeLimit(format!(
                "{total} photons in one basis state exceeds limit {MAX_TOTAL_PHOTONS}"
            )));
        }
        // Monomial expansion of Π_j (Σ_k U_kj a†_k)^{occ_j} acting on |0⟩.
        let norm: f64 = occ.iter().map(|&x| factorial(x)).product();
        let mut poly: BTreeMap<Vec<u8>, C64> = BTreeMap::new();
        poly.insert(vec![0; m], amp / norm.sqrt());
        for j in 0..m {
            for _ in 0..occ[j] {
                let mut next: BTreeMap<Vec<u8>, C64> = BTreeMap::new();
                for (mono, &coef) in &poly {
                    for k in 0..m {
                        let ujk = u[(k, j)];
                        if ujk.norm_sqr() == 0.0 {
                            continue;
                        }
                        let mut m2 = mono.clone();
                        m2[k] += 1;
                        *next.entry(m2).or_insert(C64::new(0.0, 0.0)) += coef * ujk;
                    }
                }
                poly = next;
            }
        }
        for (mono, coef) in poly {
            let weight: f64 = mono.iter().map(|&x| factorial(x)).product();
            let add = coef * weight.sqrt();
            let entry = out.amps.entry(mono).or_insert(C64::new(0.0, 0.0));
            *entry += add;
        }
    }
    out.amps.retain(|_, a| a.norm_sqr() > 0.0);
    Ok(out)
}

/// First-principles channel: evolves each photon-number layer of the input
/// ladder through `U = H† R(θ) H` exactly and projects the redundant modes
/// onto the vacuum. Returns the sub-normalized two-mode output.
pub fn heralded_fock_channel(r: f64, phases: &PhaseSample, cutoff: usize) -> Result<FockAmplitudes> {
    let n = phases.0.len();
    if n > 3 {
        return Err(Error::SizeLimit(format!(
            "interferometer with {n} modes exceeds limit 3"
        )));
    }
    if cutoff > MAX_TOTAL_PHOTONS {
        return Err(Error::SizeLimit(format!(
            "cutoff {cutoff} exceeds per-sector photon limit {MAX_TOTAL_PHOTONS}"
        )));
    }
    let h = balanced_splitter(n);
    let rot = DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            C64::from_polar(1.0, phases.0[j])
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let u = h.adjoint() * rot * &h;

    let lambda = r.tanh();
    let prefactor = 1.0 / r.cosh();
    let mut out = FockAmplitudes::new(2, cutoff);
    let mut ladder = 1.0;
    for layer in 0..=cutoff {
        // One squeezing layer |N, 0, ..., 0⟩ through the interferometer.
        let mut sector = FockAmplitudes::new(n, cutoff);
        let mut occ = vec![0u8; n];
        occ[0] = layer as u8;
        sector.set(&occ, C64::new(1.0, 0.0));
        let evolved = fock_linear_optics(&sector, &u)?;
        // Vacuum projection on the redundant modes keeps occupations
        // (j, 0, ..., 0); photon conservation forces j = layer.
        for j in 0..=layer {
            let mut kept = vec![0u8; n];
            kept[0] = j as u8;
            let a = evolved.amp(&kept);
            if a.norm_sqr() > 0.0 {
                out.set(
                    &[layer as u8, j as u8],
                    a * ladder * prefactor + out.amp(&[layer as u8, j as u8]),
                );
            }
        }
        ladder *= lambda;
    }
    Ok(out)
}

enum Quad {
    X,
    P,
}

fn apply_quadrature(state: &FockAmplitudes, mode: usize, which: Quad) -> FockAmplitudes {
    let mut out = FockAmplitudes::new(state.modes, state.cutoff + 1);
    for (occ, &amp) in state.iter() {
        let n = occ[mode] as f64;
        // raising part: a† coefficient is +1 for x, +i for p
        let mut up = occ.clone();
        up[mode] += 1;
        let raise = match which {
            Quad::X => C64::new((n + 1.0).sqrt(), 0.0),
            Quad::P => C64::new(0.0, (n + 1.0).sqrt()),
        };
        *out.amps.entry(up).or_insert(C64::new(0.0, 0.0)) += amp * raise;
        // lowering part: a coefficient is +1 for x, -i for p
        if occ[mode] > 0 {
            let mut down = occ.clone();
            down[mode] -= 1;
            let lower = match which {
                Quad::X => C64::new(n.sqrt(), 0.0),
                Quad::P => C64::new(0.0, -n.sqrt()),
            };
            *out.amps.entry(down).or_insert(C64::new(0.0, 0.0)) += amp * lower;
        }
    }
    out
}

fn inner(a: &FockAmplitudes, b: &FockAmplitudes) -> C64 {
    let mut sum = C64::new(0.0, 0.0);
    for (occ, &amp) in a.iter() {
        sum += amp.conj() * b.amp(occ);
    }
    sum
}

/// Quadrature covariance of a two-mode Fock state, after dividing out the
/// heralding norm: `σ_uv = Re ⟨uψ | vψ⟩` with `x = a + a†`, `p = -i(a - a†)`.
pub fn moments_to_covariance(state: &FockAmplitudes) -> Result<DMatrix<f64>> {
    if state.modes != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: state.modes,
        });
    }
    let norm_sq = state.norm_squared();
    if norm_sq < 1e-12 {
        return Err(Error::NormTooSmall(norm_sq));
    }
    let mut normalized = state.clone();
    let scale = 1.0 / norm_sq.sqrt();
    for amp in normalized.amps.values_mut() {
        *amp *= scale;
    }
    let applied = [
        apply_quadrature(&normalized, 0, Quad::X),
        apply_quadrature(&normalized, 0, Quad::P),
        apply_quadrature(&normalized, 1, Quad::X),
        apply_quadrature(&normalized, 1, Quad::P),
    ];
    let mut cov = DMatrix::zeros(4, 4);
    for i in 0..4 {
        for j in i..4 {
            let v = inner(&applied[i], &applied[j]).re;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(cov)
}
