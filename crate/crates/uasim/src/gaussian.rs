//! Covariance-matrix formalism for zero-mean Gaussian states.
//!
//! Quadrature ordering is mode-blocked `(x1, p1, x2, p2, ...)` and the vacuum
//! covariance is the identity, so a single-mode thermal state with mean photon
//! number `n` has covariance `(2n + 1) I`.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Slack allowed below 1 for symplectic eigenvalues of physical states.
pub const PHYSICALITY_TOL: f64 = 1e-9;

const SYMMETRY_TOL: f64 = 1e-12;
const UNITARITY_TOL: f64 = 1e-10;
const SYMPLECTIC_TOL: f64 = 1e-10;

/// The standard symplectic form Ω for `modes` modes, mode-blocked:
/// every per-mode 2x2 block is `[[0, 1], [-1, 0]]`.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for m in 0..modes {
        omega[(2 * m, 2 * m + 1)] = 1.0;
        omega[(2 * m + 1, 2 * m)] = -1.0;
    }
    omega
}

fn symmetry_defect(m: &DMatrix<f64>) -> f64 {
    let scale = m.amax().max(1.0);
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst / scale
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// A linear quadrature map `S` with `S Ω Sᵀ = Ω`, representing a Gaussian
/// unitary on `dim / 2` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    mat: DMatrix<f64>,
}

impl SymplecticMatrix {
    /// Wraps a raw matrix, rejecting anything that is not symplectic to
    /// 1e-10 absolute.
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows() + mat.nrows() % 2,
                got: mat.ncols(),
            });
        }
        let modes = mat.nrows() / 2;
        let omega = symplectic_form(modes);
        let defect = (&mat * &omega * mat.transpose() - &omega).amax();
        if defect > SYMPLECTIC_TOL {
            return Err(Error::NotSymplectic { defect });
        }
        Ok(Self { mat })
    }

    pub fn identity(modes: usize) -> Self {
        Self {
            mat: DMatrix::identity(2 * modes, 2 * modes),
        }
    }

    /// Realizes an `n x n` complex passive unitary on quadratures: the 2x2
    /// block at mode pair `(j, k)` is
    /// `[[Re U_jk, -Im U_jk], [Im U_jk, Re U_jk]]`.
    pub fn from_passive(u: &DMatrix<Complex<f64>>) -> Result<Self> {
        let n = u.nrows();
        if u.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: u.ncols(),
            });
        }
        let defect = (u.adjoint() * u - DMatrix::<Complex<f64>>::identity(n, n))
            .map(|z| z.norm())
            .amax();
        if defect > UNITARITY_TOL {
            return Err(Error::NotUnitary { defect });
        }
        let mut s = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            for k in 0..n {
                let z = u[(j, k)];
                s[(2 * j, 2 * k)] = z.re;
                s[(2 * j, 2 * k + 1)] = -z.im;
                s[(2 * j + 1, 2 * k)] = z.im;
                s[(2 * j + 1, 2 * k + 1)] = z.re;
            }
        }
        Ok(Self { mat: s })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn modes(&self) -> usize {
        self.mat.nrows() / 2
    }
}

/// A normalized linear combination of quadratures; the vacuum variance of the
/// form equals the squared norm of its coefficient vector, which is pinned
/// to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureForm {
    coeffs: DVector<f64>,
}

impl QuadratureForm {
    pub fn new(coeffs: DVector<f64>) -> Result<Self> {
        let variance = coeffs.norm_squared();
        if (variance - 1.0).abs() > 1e-10 {
            return Err(Error::UnnormalizedForm { variance });
        }
        Ok(Self { coeffs })
    }

    /// The EPR form `(x1 - x2) / sqrt(2)` on a two-mode state.
    pub fn epr_x() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            coeffs: DVector::from_vec(vec![s, 0.0, -s, 0.0]),
        }
    }

    /// The conjugate EPR form `(p1 + p2) / sqrt(2)`.
    pub fn epr_p() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            coeffs: DVector::from_vec(vec![0.0, s, 0.0, s]),
        }
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coeffs
    }
}

/// Zero-mean Gaussian state of `modes` modes held as a `2m x 2m` real
/// symmetric covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    modes: usize,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state from a covariance matrix, enforcing symmetry and the
    /// uncertainty relation `cov + iΩ ⪰ 0`.
    pub fn from_covariance(cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != cov.ncols() || cov.nrows() % 2 != 0 || cov.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: cov.nrows().max(2),
                got: cov.ncols(),
            });
        }
        let defect = symmetry_defect(&cov);
        if defect > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { defect });
        }
        let mut cov = cov;
        symmetrize(&mut cov);
        let state = Self {
            modes: cov.nrows() / 2,
            cov,
        };
        let nu_min = state
            .symplectic_eigenvalues()
            .first()
            .copied()
            .unwrap_or(f64::NAN);
        if !(nu_min >= 1.0 - PHYSICALITY_TOL) {
            return Err(Error::Unphysical { nu_min });
        }
        Ok(state)
    }

    pub fn vacuum(modes: usize) -> Self {
        Self {
            modes,
            cov: DMatrix::identity(2 * modes, 2 * modes),
        }
    }

    /// Two-mode squeezed vacuum with squeezing parameter `r >= 0` and
    /// correlation angle `theta`:
    /// `A = B = cosh(2r) I`, `C = sinh(2r) [[cos θ, sin θ], [sin θ, -cos θ]]`.
    pub fn tmsv(r: f64, theta: f64) -> Result<Self> {
        if !r.is_finite() {
            return Err(Error::NonFinite {
                name: "r",
                value: r,
            });
        }
        if r < 0.0 {
            return Err(Error::OutOfRange {
                name: "r",
                value: r,
                expected: ">= 0",
            });
        }
        Ok(Self {
            modes: 2,
            cov: tmsv_covariance_matrix(r, theta),
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Tensor product, appending `other`'s modes after `self`'s.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let d1 = 2 * self.modes;
        let d2 = 2 * other.modes;
        let mut cov = DMatrix::zeros(d1 + d2, d1 + d2);
        cov.view_mut((0, 0), (d1, d1)).copy_from(&self.cov);
        cov.view_mut((d1, d1), (d2, d2)).copy_from(&other.cov);
        GaussianState {
            modes: self.modes + other.modes,
            cov,
        }
    }

    /// Conjugates the covariance by `S` embedded on the given mode subset:
    /// `cov <- S cov Sᵀ`.
    pub fn apply_symplectic(&self, s: &SymplecticMatrix, mode_subset: &[usize]) -> Result<Self> {
        if s.modes() != mode_subset.len() {
            return Err(Error::DimensionMismatch {
                expected: mode_subset.len(),
                got: s.modes(),
            });
        }
        validate_subset(mode_subset, self.modes, false)?;
        let dim = 2 * self.modes;
        let mut full = DMatrix::identity(dim, dim);
        for (bi, &mi) in mode_subset.iter().enumerate() {
            // Clear the identity rows for embedded modes first.
            full[(2 * mi, 2 * mi)] = 0.0;
            full[(2 * mi + 1, 2 * mi + 1)] = 0.0;
            for (bj, &mj) in mode_subset.iter().enumerate() {
                for a in 0..2 {
                    for b in 0..2 {
                        full[(2 * mi + a, 2 * mj + b)] = s.matrix()[(2 * bi + a, 2 * bj + b)];
                    }
                }
            }
        }
        let mut cov = &full * &self.cov * full.transpose();
        symmetrize(&mut cov);
        Ok(Self {
            modes: self.modes,
            cov,
        })
    }

    /// Projects the given modes onto the vacuum and returns the conditional
    /// state of the remaining modes together with the success probability
    /// `2^m / sqrt(det(σ_B + I))`.
    pub fn herald_vacuum(&self, measured: &[usize]) -> Result<(Self, f64)> {
        validate_subset(measured, self.modes, true)?;
        let kept: Vec<usize> = (0..self.modes).filter(|m| !measured.contains(m)).collect();
        let rows = |modes: &[usize]| -> Vec<usize> {
            modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect()
        };
        let ka = rows(&kept);
        let kb = rows(measured);
        let sigma_a = self.cov.select_rows(ka.iter()).select_columns(ka.iter());
        let sigma_b = self.cov.select_rows(kb.iter()).select_columns(kb.iter());
        let sigma_ab = self.cov.select_rows(ka.iter()).select_columns(kb.iter());

        let m = sigma_b + DMatrix::identity(kb.len(), kb.len());
        let det = m.determinant();
        if det.abs() < 1e-12 {
            return Err(Error::IllConditioned { det });
        }
        let inv = m.try_inverse().ok_or(Error::IllConditioned { det })?;
        let mut cond = &sigma_a - &sigma_ab * inv * sigma_ab.transpose();
        symmetrize(&mut cond);
        let probability = 2f64.powi(measured.len() as i32) / det.sqrt();
        Ok((
            Self {
                modes: kept.len(),
                cov: cond,
            },
            probability,
        ))
    }

    /// Mixes every mode with the vacuum at loss probability `gamma`:
    /// `cov <- (1 - γ) cov + γ I`.
    pub fn apply_uniform_loss(&self, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::OutOfRange {
                name: "gamma",
                value: gamma,
                expected: "in [0, 1]",
            });
        }
        let dim = 2 * self.modes;
        let cov = &self.cov * (1.0 - gamma) + DMatrix::identity(dim, dim) * gamma;
        Ok(Self {
            modes: self.modes,
            cov,
        })
    }

    /// `1 / sqrt(det cov)`, in `(0, 1]` for physical states.
    pub fn purity(&self) -> f64 {
        purity(&self.cov)
    }

    /// Symplectic spectrum, sorted ascending.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        symplectic_eigenvalues(&self.cov)
    }

    /// Variance of a normalized quadrature form: `V = fᵀ cov f`.
    pub fn quadrature_variance(&self, form: &QuadratureForm) -> Result<f64> {
        let f = form.coefficients();
        if f.len() != 2 * self.modes {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.modes,
                got: f.len(),
            });
        }
        Ok((f.transpose() * &self.cov * f)[(0, 0)])
    }
}

fn validate_subset(subset: &[usize], modes: usize, proper: bool) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::BadModeSubset("empty mode subset".into()));
    }
    let mut seen = vec![false; modes];
    for &m in subset {
        if m >= modes {
            return Err(Error::BadModeSubset(format!(
                "mode index {m} out of range for {modes} modes"
            )));
        }
        if seen[m] {
            return Err(Error::BadModeSubset(format!("duplicate mode index {m}")));
        }
        seen[m] = true;
    }
    if proper && subset.len() == modes {
        return Err(Error::BadModeSubset(
            "cannot herald every mode of the state".into(),
        ));
    }
    Ok(())
}

/// Raw TMSV covariance matrix (no validation).
pub(crate) fn tmsv_covariance_matrix(r: f64, theta: f64) -> DMatrix<f64> {
    let a = (2.0 * r).cosh();
    let s = (2.0 * r).sinh();
    let (sin, cos) = theta.sin_cos();
    DMatrix::from_row_slice(
        4,
        4,
        &[
            a,
            0.0,
            s * cos,
            s * sin,
            0.0,
            a,
            s * sin,
            -s * cos,
            s * cos,
            s * sin,
            a,
            0.0,
            s * sin,
            -s * cos,
            0.0,
            a,
        ],
    )
}

/// `1 / sqrt(det cov)`.
pub fn purity(cov: &DMatrix<f64>) -> f64 {
    1.0 / cov.determinant().sqrt()
}

/// Symplectic spectrum of a covariance matrix: the moduli of the eigenvalues
/// of `iΩ cov`, deduplicated to one value per mode and sorted ascending.
pub fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Vec<f64> {
    let modes = cov.nrows() / 2;
    let m = symplectic_form(modes) * cov;
    let mut moduli: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.partial_cmp(a).unwrap());
    // Eigenvalues come in ±iν pairs; keep one per pair.
    let mut nus: Vec<f64> = moduli.into_iter().step_by(2).collect();
    nus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nus
}

/// Two-mode symplectic eigenvalues via the invariant formula
/// `ν±² = (Δ ± sqrt(Δ² - 4 det σ)) / 2` with `Δ = det A + det B + 2 det C`.
pub fn symplectic_eigenvalues_two_mode(cov: &DMatrix<f64>) -> Result<(f64, f64)> {
    let (da, db, dc, dsigma) = two_mode_invariants(cov)?;
    let delta = da + db + 2.0 * dc;
    let disc = (delta * delta - 4.0 * dsigma).max(0.0).sqrt();
    let nu_minus = ((delta - disc) / 2.0).max(0.0).sqrt();
    let nu_plus = ((delta + disc) / 2.0).sqrt();
    Ok((nu_minus, nu_plus))
}

fn two_mode_invariants(cov: &DMatrix<f64>) -> Result<(f64, f64, f64, f64)> {
    if cov.nrows() != 4 || cov.ncols() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: cov.nrows(),
        });
    }
    let block = |i: usize, j: usize| cov.view((2 * i, 2 * j), (2, 2)).clone_owned();
    let da = block(0, 0).determinant();
    let db = block(1, 1).determinant();
    let dc = block(0, 1).determinant();
    Ok((da, db, dc, cov.determinant()))
}

/// Smallest symplectic eigenvalue after partial transposition of the second
/// mode (`Δ̃ = det A + det B - 2 det C`); `ν̃₋ < 1` certifies entanglement.
pub fn ppt_min_symplectic_eigenvalue(cov: &DMatrix<f64>) -> Result<f64> {
    let (da, db, dc, dsigma) = two_mode_invariants(cov)?;
    let delta = da + db - 2.0 * dc;
    let disc = (delta * delta - 4.0 * dsigma).max(0.0).sqrt();
    Ok(((delta - disc) / 2.0).max(0.0).sqrt())
}

/// Entanglement of formation (bits) of a symmetric two-mode Gaussian state
/// (`det A = det B`), via the closed form
/// `E = c₊ log₂ c₊ - c₋ log₂ c₋`, `c± = (ν̃₋^{-1/2} ± ν̃₋^{1/2})² / 4`.
pub fn eof_symmetric(cov: &DMatrix<f64>) -> Result<f64> {
    let (da, db, _, _) = two_mode_invariants(cov)?;
    let defect = (da - db).abs();
    if defect > 1e-9 * (1.0 + da.abs() + db.abs()) {
        return Err(Error::AsymmetricState { defect });
    }
    let nu = ppt_min_symplectic_eigenvalue(cov)?;
    Ok(eof_from_nu(nu))
}

/// Closed-form symmetric-state EoF as a function of `ν̃₋`.
pub fn eof_from_nu(nu: f64) -> f64 {
    if nu >= 1.0 {
        return 0.0;
    }
    let sq = nu.sqrt();
    let c_plus = (1.0 / sq + sq).powi(2) / 4.0;
    let c_minus = (1.0 / sq - sq).powi(2) / 4.0;
    let term = |c: f64| if c > 0.0 { c * c.log2() } else { 0.0 };
    term(c_plus) - term(c_minus)
}

/// Logarithmic negativity `max(0, -log₂ ν̃₋)`.
pub fn log_negativity(cov: &DMatrix<f64>) -> Result<f64> {
    let nu = ppt_min_symplectic_eigenvalue(cov)?;
    Ok((-nu.log2()).max(0.0))
}

/// Squeezing of a normalized quadrature variance, in decibels:
/// `-10 log₁₀ V` (vacuum gives 0 dB).
pub fn squeezing_db(variance: f64) -> f64 {
    -10.0 * variance.log10()
}
