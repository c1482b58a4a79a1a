//! Cancellation-safe exponential helpers.

use num_complex::Complex64;

/// e^x - 1 - x without cancellation for small |x|.
pub fn expm1m(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        // x^2/2 (1 + x/3 + x^2/12 + x^3/60 + x^4/360), next term ~ x^5/2520
        let c = 1.0 + x / 3.0 + x * x / 12.0 + x * x * x / 60.0 + x * x * x * x / 360.0;
        0.5 * x * x * c
    } else {
        x.exp_m1() - x
    }
}

/// e^z - 1 for complex z, stable near 0.
pub fn cexpm1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        // z (1 + z/2 (1 + z/3 (1 + z/4))), next term ~ z^5/120
        z * (1.0 + z / 2.0 * (1.0 + z / 3.0 * (1.0 + z / 4.0)))
    } else {
        z.exp() - 1.0
    }
}

/// e^z - 1 - z for complex z, stable near 0.
pub fn cexpm1m(z: Complex64) -> Complex64 {
    if z.norm() < 1e-3 {
        let c = 1.0 + z / 3.0 + z * z / 12.0 + z * z * z / 60.0 + z * z * z * z / 360.0;
        0.5 * z * z * c
    } else {
        z.exp() - 1.0 - z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm1m_agrees_with_direct_evaluation_at_moderate_x() {
        // at |x| >= 0.5 the naive form has no damaging cancellation
        for &x in &[-2.0f64, -0.5, 0.5, 2.0] {
            let direct = x.exp() - 1.0 - x;
            assert!((expm1m(x) - direct).abs() <= 1e-13 * direct.abs());
        }
        // both sides of the series switchover agree to full precision
        for &x in &[-9.9e-4f64, 9.9e-4, -1.1e-3, 1.1e-3] {
            let stable = x.exp_m1() - x;
            assert!((expm1m(x) - stable).abs() <= 1e-12 * stable.abs());
        }
    }

    #[test]
    fn expm1m_keeps_relative_accuracy_for_tiny_x() {
        let x = 1e-8;
        // leading term x^2/2, first correction x^3/6
        let expect = 0.5 * x * x + x * x * x / 6.0;
        assert!((expm1m(x) - expect).abs() < 1e-16 * expect);
        let xn = -1e-8;
        let expect_n = 0.5 * xn * xn + xn * xn * xn / 6.0;
        assert!((expm1m(xn) - expect_n).abs() < 1e-16 * expect_n.abs());
    }

    #[test]
    fn complex_helpers_match_real_axis() {
        for &x in &[-3.0, -1e-6, 1e-6, 0.7] {
            let z = Complex64::new(x, 0.0);
            assert!((cexpm1(z).re - x.exp_m1()).abs() < 1e-15 * x.exp_m1().abs().max(1e-30));
            assert!(cexpm1(z).im == 0.0);
            assert!((cexpm1m(z).re - expm1m(x)).abs() < 1e-15 * expm1m(x).abs().max(1e-30));
        }
    }

    #[test]
    fn complex_helpers_handle_imaginary_arguments() {
        let z = Complex64::new(0.0, 1.0);
        let want = Complex64::new(1.0_f64.cos() - 1.0, 1.0_f64.sin());
        assert!((cexpm1(z) - want).norm() < 1e-15);
    }
}
