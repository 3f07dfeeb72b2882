//! Gamma-function helpers used by the moment bounds and the certificate.

/// Lanczos coefficients for g = 7, n = 9.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma requires x > 0, got {x}");
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx).
        return std::f64::consts::PI.ln()
            - (std::f64::consts::PI * x).sin().ln()
            - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Gamma function for x > 0.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn known_values() {
        assert_relative_eq!(gamma(1.0), 1.0, max_relative = 1e-13);
        assert_relative_eq!(gamma(5.0), 24.0, max_relative = 1e-13);
        assert_relative_eq!(
            gamma(0.5),
            std::f64::consts::PI.sqrt(),
            max_relative = 1e-13
        );
        // Γ(1/6) and Γ(7/6), used by the sextic moment formulas.
        assert_relative_eq!(gamma(1.0 / 6.0), 5.566_316_001_780_235, max_relative = 1e-12);
        assert_relative_eq!(gamma(7.0 / 6.0), 0.927_719_333_630_039_2, max_relative = 1e-12);
    }

    #[test]
    fn recurrence() {
        for &x in &[0.11, 0.7, 1.3, 3.9, 17.2] {
            assert_relative_eq!(gamma(x + 1.0), x * gamma(x), max_relative = 1e-12);
        }
    }
}
