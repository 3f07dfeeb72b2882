//! Perturbative heat flux and thermal conductivity for the strongly
//! anharmonic chain, and exponent fitting for simulated sweeps.
//!
//! The leading-order bond current for a small temperature step is
//!
//! ```text
//! F_{j,j+1} = -c(ε) J²/λ^{4/3} T_j^{-4/3} (T_{j+1} - T_j)
//! ```
//!
//! Writing `𝒞 = λ^{4/3}/(c(ε) J²)` and `α = 4/3`, a steady profile solves the
//! telescoping system `F 𝒞 T_j^α = T_j - T_{j+1}`, which yields Fourier's law
//! `F = K (T_1 - T_N)/(N-1)` with `K = (N-1)/Σ_j 𝒞 T_j^α`, i.e.
//! `K ∝ J²/(λ^{4/3} T^{4/3})` for a small gradient.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

pub const TEMPERATURE_EXPONENT: f64 = 4.0 / 3.0;

#[derive(Debug, Error, PartialEq)]
pub enum ConductivityError {
    #[error("profile solve needs N >= 2, got {0}")]
    ChainTooShort(usize),
    #[error("inputs must be positive (T1 = {t1}, TN = {tn}, J = {j}, lambda = {lambda}, c_eps = {c_eps})")]
    NonPositiveInput {
        t1: f64,
        tn: f64,
        j: f64,
        lambda: f64,
        c_eps: f64,
    },
    #[error("exponent fit needs at least 4 points spanning a factor of 4 in T (got {points} points, span {span:.2})")]
    InsufficientSpan { points: usize, span: f64 },
}

/// Leading-order bond current between neighboring sites at temperatures
/// `t_j`, `t_j1`.
pub fn perturbative_flux(t_j: f64, t_j1: f64, j_amp: f64, lambda: f64, c_eps: f64) -> f64 {
    -c_eps * j_amp * j_amp / lambda.powf(TEMPERATURE_EXPONENT) * t_j.powf(-TEMPERATURE_EXPONENT)
        * (t_j1 - t_j)
}

/// Solution of the telescoping steady-state system.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSolution {
    pub flux: f64,
    pub profile: Vec<f64>,
    pub conductivity: f64,
    /// False when the bisection had to leave the regime of a positive,
    /// monotone profile (gradient too large for the linearized flux law).
    pub linearization_ok: bool,
}

fn profile_for_flux(flux: f64, t1: f64, n: usize, c_coef: f64) -> Option<Vec<f64>> {
    let mut profile = Vec::with_capacity(n);
    profile.push(t1);
    let mut t = t1;
    for _ in 1..n {
        t -= flux * c_coef * t.powf(TEMPERATURE_EXPONENT);
        if !(t > 0.0) || !t.is_finite() {
            return None;
        }
        profile.push(t);
    }
    Some(profile)
}

/// Solves `F 𝒞 T_j^{4/3} = T_j - T_{j+1}` for the common flux and the
/// interior profile, given the boundary temperatures.
pub fn conductivity_profile(
    t1: f64,
    tn: f64,
    n: usize,
    j_amp: f64,
    lambda: f64,
    c_eps: f64,
) -> Result<ProfileSolution, ConductivityError> {
    if n < 2 {
        return Err(ConductivityError::ChainTooShort(n));
    }
    if !(t1 > 0.0 && tn > 0.0 && j_amp > 0.0 && lambda > 0.0 && c_eps > 0.0) {
        return Err(ConductivityError::NonPositiveInput {
            t1,
            tn,
            j: j_amp,
            lambda,
            c_eps,
        });
    }
    let c_coef = lambda.powf(TEMPERATURE_EXPONENT) / (c_eps * j_amp * j_amp);

    // T_N is strictly decreasing in the flux, so bisect.
    let end_temp = |f: f64| profile_for_flux(f, t1, n, c_coef).map(|p| p[n - 1]);
    let mut linearization_ok = true;

    if (t1 - tn).abs() < 1e-300 {
        return Ok(ProfileSolution {
            flux: 0.0,
            profile: vec![t1; n],
            conductivity: conductivity_from_profile(&vec![t1; n], c_coef),
            linearization_ok,
        });
    }

    let sign = if t1 > tn { 1.0 } else { -1.0 };
    let mut lo = 0.0;
    let mut hi = sign * (t1 - tn) / ((n - 1) as f64 * c_coef * tn.min(t1).powf(TEMPERATURE_EXPONENT));
    // Grow the bracket until the end temperature crosses the target (or the
    // profile leaves the positive cone, which flags the failure).
    for _ in 0..200 {
        match end_temp(sign * hi) {
            Some(t_end) if sign * (t_end - tn) > 0.0 => hi *= 2.0,
            Some(_) => break,
            None => {
                linearization_ok = false;
                hi *= 0.5;
                break;
            }
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        match end_temp(sign * mid) {
            Some(t_end) if sign * (t_end - tn) > 0.0 => lo = mid,
            Some(_) => hi = mid,
            None => {
                linearization_ok = false;
                hi = mid;
            }
        }
    }
    let flux = sign * 0.5 * (lo + hi);
    let profile = profile_for_flux(flux, t1, n, c_coef)
        .unwrap_or_else(|| vec![t1; n]);
    let conductivity = conductivity_from_profile(&profile, c_coef);
    Ok(ProfileSolution {
        flux,
        profile,
        conductivity,
        linearization_ok,
    })
}

fn conductivity_from_profile(profile: &[f64], c_coef: f64) -> f64 {
    let n = profile.len();
    let denom: f64 = profile[..n - 1]
        .iter()
        .map(|t| c_coef * t.powf(TEMPERATURE_EXPONENT))
        .sum();
    (n - 1) as f64 / denom
}

/// One point of a conductivity sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub temperature: f64,
    pub lambda: f64,
    pub j_amp: f64,
    pub n: usize,
    pub flux: f64,
    pub flux_err: f64,
    pub conductivity: f64,
    pub conductivity_err: f64,
    pub seed: u64,
}

/// Sweep output: the measured grid plus the fitted temperature exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub fit: ExponentFit,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# conductivity sweep\n");
        out.push_str("T,lambda,J,N,flux,flux_err,K,K_err,seed\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                p.temperature,
                p.lambda,
                p.j_amp,
                p.n,
                p.flux,
                p.flux_err,
                p.conductivity,
                p.conductivity_err,
                p.seed
            ));
        }
        out
    }
}

/// Weighted log-log fit of K against T with a bootstrap confidence interval.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Fits `log K = slope * log T + intercept` by weighted least squares.
///
/// Points carry (T, K, K_err); the confidence interval comes from a
/// parametric bootstrap over the point errors (seeded, deterministic).
pub fn fit_exponent(
    points: &[(f64, f64, f64)],
    seed: u64,
) -> Result<ExponentFit, ConductivityError> {
    let span = points
        .iter()
        .map(|p| p.0)
        .fold(f64::NEG_INFINITY, f64::max)
        / points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    if points.len() < 4 || !(span >= 4.0) {
        return Err(ConductivityError::InsufficientSpan {
            points: points.len(),
            span,
        });
    }

    let wls = |ks: &[f64]| -> (f64, f64) {
        let mut sw = 0.0;
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for (i, &(t, k, k_err)) in points.iter().enumerate() {
            let x = t.ln();
            let y = ks[i].max(1e-300).ln();
            // Error of log K is K_err/K; unweighted when errors are zero.
            let sigma = if k_err > 0.0 { k_err / k } else { 1.0 };
            let w = 1.0 / (sigma * sigma);
            sw += w;
            sx += w * x;
            sy += w * y;
            sxx += w * x * x;
            sxy += w * x * y;
        }
        let denom = sw * sxx - sx * sx;
        let slope = (sw * sxy - sx * sy) / denom;
        let intercept = (sy * sxx - sx * sxy) / denom;
        (slope, intercept)
    };

    let central: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (slope, intercept) = wls(&central);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let boots = 1000;
    let mut slopes = Vec::with_capacity(boots);
    for _ in 0..boots {
        let resampled: Vec<f64> = points
            .iter()
            .map(|&(_, k, k_err)| {
                let xi: f64 = rng.sample(StandardNormal);
                (k + xi * k_err).max(1e-12 * k.abs().max(1e-300))
            })
            .collect();
        slopes.push(wls(&resampled).0);
    }
    slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ci_low = slopes[(0.025 * boots as f64) as usize];
    let ci_high = slopes[(0.975 * boots as f64) as usize];

    Ok(ExponentFit {
        slope,
        intercept,
        ci_low,
        ci_high,
    })
}
