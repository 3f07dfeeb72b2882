//! Decay kernels: the mixed exponential-in-time, power-law-in-space envelope
//!
//! ```text
//! F^{(w)}_{xy} = e^{-w |x₀-y₀|/ε} [ (1-δ_{x⃗y⃗})/|x⃗-y⃗|^p + δ_{x⃗y⃗} ]
//! ```
//!
//! together with its lattice row sums and convolution constants, all
//! computed as actual convergent sums.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("kernel rate w must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("spatial exponent must satisfy p > 1, got {0}")]
    NonIntegrableExponent(f64),
}

/// F^{(w)} between two cells separated by `dt` slices and `dx` sites.
pub fn decay_kernel(w: f64, dt: u64, dx: u64, p: f64) -> Result<f64, KernelError> {
    if !(w > 0.0) {
        return Err(KernelError::NonPositiveRate(w));
    }
    let spatial = if dx == 0 {
        1.0
    } else {
        (dx as f64).powf(-p)
    };
    Ok((-w * dt as f64).exp() * spatial)
}

/// Riemann zeta for p > 1 by direct summation plus an Euler-Maclaurin tail.
pub fn riemann_zeta(p: f64) -> f64 {
    assert!(p > 1.0);
    let cut = 100_000u64;
    let head: f64 = (1..=cut).map(|k| (k as f64).powf(-p)).sum();
    let k = cut as f64;
    head + k.powf(1.0 - p) / (p - 1.0) - 0.5 * k.powf(-p)
}

/// `Σ_{m ∈ ℤ} e^{-w|m|} = 1 + 2/(e^w - 1)`.
pub fn exp_row_sum(w: f64) -> f64 {
    1.0 + 2.0 / (w.exp() - 1.0)
}

/// Exact infinite-lattice row sum `sup_x Σ_{y≠x} F^{(w)}_{xy}`.
pub fn kernel_row_sum(w: f64, p: f64) -> Result<f64, KernelError> {
    if !(w > 0.0) {
        return Err(KernelError::NonPositiveRate(w));
    }
    if !(p > 1.0) {
        return Err(KernelError::NonIntegrableExponent(p));
    }
    // Same site, different time; plus every other site at any time.
    Ok(2.0 / (w.exp() - 1.0) + exp_row_sum(w) * 2.0 * riemann_zeta(p))
}

/// Certified constant for the spatial convolution
/// `Σ_{k≠x,y} |x-k|^{-p} |k-y|^{-p} ≤ C_p |x-y|^{-p}`:
/// splitting on which factor exceeds half the separation gives
/// `C_p = 2^{p+2} ζ(p)`.
pub fn spatial_convolution_certified(p: f64) -> f64 {
    2.0_f64.powf(p + 2.0) * riemann_zeta(p)
}

/// Measured supremum of the spatial convolution ratio on a finite range.
pub fn spatial_convolution_numeric(p: f64, max_sep: i64, box_half: i64) -> f64 {
    let mut sup: f64 = 0.0;
    for d in 1..=max_sep {
        let mut acc = 0.0;
        for k in -box_half..=box_half {
            if k == 0 || k == d {
                continue;
            }
            acc += (k.abs() as f64).powf(-p) * ((k - d).abs() as f64).powf(-p);
        }
        sup = sup.max(acc * (d as f64).powf(p));
    }
    sup
}

/// Certified constant in
/// `Σ_{z} F^{(w₁)}_{xz} F^{(w₂)}_{zy} ≤ C F^{(w₁)}_{xy}` for `w₁ < w₂`:
/// the temporal part contributes `1 + 2/(e^{w₂-w₁} - 1)` and the spatial
/// part `max(2 + C_p, 1 + 2ζ(2p))`.
pub fn convolution_constant_certified(w1: f64, w2: f64, p: f64) -> Result<f64, KernelError> {
    if !(w1 > 0.0 && w2 > w1) {
        return Err(KernelError::NonPositiveRate(w1.min(w2 - w1)));
    }
    if !(p > 1.0) {
        return Err(KernelError::NonIntegrableExponent(p));
    }
    let spatial = (2.0 + spatial_convolution_certified(p)).max(1.0 + 2.0 * riemann_zeta(2.0 * p));
    Ok(exp_row_sum(w2 - w1) * spatial)
}

/// Measured supremum of the full convolution ratio on a finite box.
pub fn convolution_constant_numeric(
    w1: f64,
    w2: f64,
    p: f64,
    t_half: i64,
    x_half: i64,
) -> Result<f64, KernelError> {
    if !(w1 > 0.0 && w2 > 0.0) {
        return Err(KernelError::NonPositiveRate(w1.min(w2)));
    }
    let f = |w: f64, dt: i64, dx: i64| -> f64 {
        let spatial = if dx == 0 {
            1.0
        } else {
            (dx.abs() as f64).powf(-p)
        };
        (-w * dt.abs() as f64).exp() * spatial
    };
    let mut sup: f64 = 0.0;
    // Fix x at the origin, scan target cells y on the box.
    for yt in 0..=t_half {
        for yx in 0..=x_half {
            if yt == 0 && yx == 0 {
                continue;
            }
            let mut acc = 0.0;
            for zt in -t_half..=t_half {
                for zx in -x_half..=x_half {
                    if (zt == 0 && zx == 0) || (zt == yt && zx == yx) {
                        continue;
                    }
                    acc += f(w1, zt, zx) * f(w2, yt - zt, yx - zx);
                }
            }
            sup = sup.max(acc / f(w1, yt, yx));
        }
    }
    Ok(sup)
}
