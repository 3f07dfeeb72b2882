//! Closed forms for the decoupled harmonic Ornstein-Uhlenbeck process: the
//! 2x2 propagator, its stationary covariance, and the simplified discrete-time
//! quadratic form used by the lattice expansion.
//!
//! Per site the drift matrix is `A0 = [[0, -1], [M, ζ]]` and the noise
//! `σ² = diag(0, 2ζT)`. Writing `α = ζ/2` and `ρ² = α² - M`,
//!
//! ```text
//! exp(-τ A0) = e^{-τα} [ cosh(τρ) I + sinh(τρ)/ρ · [[α, 1], [-M, -α]] ]
//! ```
//!
//! with `cosh → cos`, `sinh(τρ)/ρ → sin(τρ̃)/ρ̃`, `ρ̃ = √(M - α²)` in the
//! strong-pinning regime `M > α²`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OuError {
    #[error("OU parameters must have alpha > 0, M > 0, T > 0")]
    InvalidParams,
    #[error("operation requires the strong-pinning regime M = 3α² (got M = {m}, α = {alpha})")]
    RegimeFlagAbsent { m: f64, alpha: f64 },
    #[error("vector length {got} does not match grid size {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative time argument {0}")]
    NegativeTime(f64),
}

/// Parameters of one decoupled site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    pub alpha: f64,
    pub pinning: f64,
    pub temperature: f64,
}

impl OuParams {
    pub fn new(alpha: f64, pinning: f64, temperature: f64) -> Result<Self, OuError> {
        if !(alpha > 0.0 && pinning > 0.0 && temperature > 0.0) {
            return Err(OuError::InvalidParams);
        }
        Ok(OuParams {
            alpha,
            pinning,
            temperature,
        })
    }

    pub fn zeta(&self) -> f64 {
        2.0 * self.alpha
    }

    /// `ρ² = α² - M`; negative in the strong-pinning regime.
    pub fn rho_squared(&self) -> f64 {
        self.alpha * self.alpha - self.pinning
    }

    pub fn strong_pinning(&self) -> bool {
        self.pinning > self.alpha * self.alpha
    }

    /// Whether M = 3α² holds (the regime the simplified quadratic form uses).
    pub fn is_triple_pinning(&self) -> bool {
        (self.pinning - 3.0 * self.alpha * self.alpha).abs()
            <= 1e-9 * self.pinning.max(1.0)
    }
}

pub type Mat2 = [[f64; 2]; 2];

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Spectral (2-)norm of a 2x2 matrix via the singular values.
pub fn mat2_norm(a: &Mat2) -> f64 {
    // Eigenvalues of AᵀA.
    let g00 = a[0][0] * a[0][0] + a[1][0] * a[1][0];
    let g01 = a[0][0] * a[0][1] + a[1][0] * a[1][1];
    let g11 = a[0][1] * a[0][1] + a[1][1] * a[1][1];
    let tr = g00 + g11;
    let det = g00 * g11 - g01 * g01;
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    (0.5 * (tr + disc)).sqrt()
}

/// cosh(τ√s) and sinh(τ√s)/√s evaluated stably for either sign of s
/// (trigonometric branch for s < 0, series near s = 0).
fn cosh_sinhc(s: f64, tau: f64) -> (f64, f64) {
    let z = s * tau * tau;
    if z.abs() < 1e-8 {
        let c = 1.0 + z / 2.0 + z * z / 24.0;
        let sc = tau * (1.0 + z / 6.0 + z * z / 120.0);
        (c, sc)
    } else if s > 0.0 {
        let r = s.sqrt();
        ((r * tau).cosh(), (r * tau).sinh() / r)
    } else {
        let r = (-s).sqrt();
        ((r * tau).cos(), (r * tau).sin() / r)
    }
}

/// `exp(-τ A0)` for τ ≥ 0.
pub fn propagator(tau: f64, params: &OuParams) -> Result<Mat2, OuError> {
    if tau < 0.0 {
        return Err(OuError::NegativeTime(tau));
    }
    let alpha = params.alpha;
    let m = params.pinning;
    let (c, sc) = cosh_sinhc(params.rho_squared(), tau);
    let damp = (-tau * alpha).exp();
    Ok([
        [damp * (c + alpha * sc), damp * sc],
        [damp * (-m * sc), damp * (c - alpha * sc)],
    ])
}

/// Stationary covariance `diag(T/M, T)` of the decoupled site.
pub fn stationary_covariance(params: &OuParams) -> Mat2 {
    [
        [params.temperature / params.pinning, 0.0],
        [0.0, params.temperature],
    ]
}

/// Banded simplified inverse covariance on the discrete time grid:
/// `D⁻¹ = C⁻¹ ( (M/ζ) δ_{t,t'} + c₁ (-Δ)(t,t') )` with
/// `(-Δ)(t,s) = 2δ_{t,s} - δ_{|t-s|,1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteQuadraticForm {
    pub grid: usize,
    pub eps: f64,
    pub c_inv: f64,
    pub m_over_zeta: f64,
    pub c1: f64,
}

impl DiscreteQuadraticForm {
    pub fn new(grid: usize, eps: f64, c_inv: f64, m_over_zeta: f64, c1: f64) -> Self {
        assert!(grid >= 2, "grid size must be >= 2");
        DiscreteQuadraticForm {
            grid,
            eps,
            c_inv,
            m_over_zeta,
            c1,
        }
    }

    /// Banded matrix-vector product.
    pub fn dinv_apply(&self, v: &[f64]) -> Result<Vec<f64>, OuError> {
        if v.len() != self.grid {
            return Err(OuError::DimensionMismatch {
                expected: self.grid,
                got: v.len(),
            });
        }
        let diag = self.m_over_zeta + 2.0 * self.c1;
        let mut out = vec![0.0; self.grid];
        for i in 0..self.grid {
            let mut acc = diag * v[i];
            if i > 0 {
                acc -= self.c1 * v[i - 1];
            }
            if i + 1 < self.grid {
                acc -= self.c1 * v[i + 1];
            }
            out[i] = self.c_inv * acc;
        }
        Ok(out)
    }

    pub fn quadratic_form(&self, v: &[f64]) -> Result<f64, OuError> {
        let av = self.dinv_apply(v)?;
        Ok(v.iter().zip(&av).map(|(a, b)| a * b).sum())
    }
}

/// Exact 1/D̂(p₀) from the Fourier transform of `e^{-α|τ|} cos(ρ̃τ)`:
/// `D̂(p₀) = 2α (M + p₀²) / [(M + p₀²)² - 4(M - α²) p₀²]`.
pub fn exact_dhat_inverse(p0: f64, alpha: f64, m: f64) -> f64 {
    let u = p0 * p0;
    let num = (m + u) * (m + u) - 4.0 * (m - alpha * alpha) * u;
    num / (2.0 * alpha * (m + u))
}

/// Curvature-matched constant `c` in the approximation
/// `D̂⁻¹(p₀) ≈ M/(2α) + (c/α)(1 - cos p₀)`.
///
/// Matching d²/dp₀² at p₀ = 0 gives `c = (4α² - 3M)/M`; note it is negative
/// at M = 3α².
pub fn curvature_constant(alpha: f64, m: f64) -> f64 {
    (4.0 * alpha * alpha - 3.0 * m) / m
}

/// The small banded-operator coefficient `c₁ = c/(2α) = O(1/α)` matching
/// the discrete symbol `M/ζ + 2c₁(1 - cos p₀)` to the exact curvature.
pub fn c1_from_curvature(alpha: f64, m: f64) -> f64 {
    curvature_constant(alpha, m) / (2.0 * alpha)
}

/// Discrete-time approximation of 1/D̂ in the M = 3α² regime.
pub fn dhat_inverse(p0: f64, params: &OuParams) -> Result<f64, OuError> {
    if !params.is_triple_pinning() {
        return Err(OuError::RegimeFlagAbsent {
            m: params.pinning,
            alpha: params.alpha,
        });
    }
    let c = curvature_constant(params.alpha, params.pinning);
    Ok(params.pinning / (2.0 * params.alpha) + (c / params.alpha) * (1.0 - p0.cos()))
}

/// Relative size of the covariance parts dropped by the simplified quadratic
/// form, measured in L² over τ ∈ [0, cut].
///
/// `sin_part_ratio` compares the `α sin(ρ̃τ)/ρ̃` correction against the kept
/// `cos(ρ̃τ)` in the position-position entry; `cross_part_ratio` compares the
/// discarded position-momentum entry against the kept diagonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffdiagAudit {
    pub sin_part_ratio: f64,
    pub cross_part_ratio: f64,
}

pub fn offdiagonal_audit(params: &OuParams, cut: f64, samples: usize) -> OffdiagAudit {
    let mut kept = 0.0;
    let mut sin_part = 0.0;
    let mut cross = 0.0;
    let cov = stationary_covariance(params);
    for i in 0..samples {
        let tau = cut * (i as f64 + 0.5) / samples as f64;
        let (c, sc) = cosh_sinhc(params.rho_squared(), tau);
        let damp = (-params.alpha * tau).exp();
        let kept_qq = damp * c * cov[0][0];
        let sin_qq = damp * params.alpha * sc * cov[0][0];
        let cross_qp = damp * sc * cov[1][1];
        kept += kept_qq * kept_qq;
        sin_part += sin_qq * sin_qq;
        cross += cross_qp * cross_qp;
    }
    OffdiagAudit {
        sin_part_ratio: (sin_part / kept).sqrt(),
        cross_part_ratio: (cross / kept).sqrt(),
    }
}
