//! Overflow-safe elementary functions and the Gaussian tail.

use std::f64::consts::{LN_2, PI};

use libm::erfc;

/// `ln cosh(x)` without overflow for large `|x|`.
pub fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// `ln(sinh(x)/x)`, equal to 0 at the removable singularity.
pub fn ln_sinhc(x: f64) -> f64 {
    let a = x.abs();
    if a < 1e-3 {
        let a2 = a * a;
        // series of ln(sinh x / x)
        a2 / 6.0 - a2 * a2 / 180.0 + a2 * a2 * a2 / 2835.0
    } else if a < 20.0 {
        (a.sinh() / a).ln()
    } else {
        a + (-(-2.0 * a).exp()).ln_1p() - LN_2 - a.ln()
    }
}

/// Derivative of [`ln_sinhc`]: `coth(x) - 1/x`.
pub fn langevin(x: f64) -> f64 {
    let a = x.abs();
    let val = if a < 1e-3 {
        let a2 = a * a;
        a / 3.0 - a * a2 / 45.0 + 2.0 * a * a2 * a2 / 945.0
    } else {
        1.0 / a.tanh() - 1.0 / a
    };
    val.copysign(x)
}

/// `ln(e^a + e^b)`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Gaussian upper tail `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `ln Q(x)`, accurate far into the upper tail where `Q` underflows.
pub fn ln_q(x: f64) -> f64 {
    if x < -5.0 {
        (-q_function(-x)).ln_1p()
    } else if x < 30.0 {
        q_function(x).ln()
    } else {
        // Asymptotic series of the Mills ratio.
        let r = 1.0 / (x * x);
        let series = 1.0 - r + 3.0 * r * r - 15.0 * r * r * r + 105.0 * r * r * r * r;
        -0.5 * x * x - (x * (2.0 * PI).sqrt()).ln() + series.ln()
    }
}

/// Pairwise summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_cosh_matches_direct_and_survives_large_arguments() {
        for &x in &[0.0, 0.3, -1.7, 5.0, 19.0] {
            assert!((ln_cosh(x) - x.cosh().ln()).abs() < 1e-14);
        }
        assert!((ln_cosh(1e5) - (1e5 - LN_2)).abs() < 1e-9);
    }

    #[test]
    fn ln_sinhc_branches_agree() {
        for &x in &[1e-12f64, 1e-4, 0.999e-3, 1.001e-3, 0.5, 3.0, 19.99, 20.01, 40.0] {
            let direct = if x < 1e-8 { 0.0 } else { (x.sinh() / x).ln() };
            assert!((ln_sinhc(x) - direct).abs() < 1e-12, "x={x}");
            assert_eq!(ln_sinhc(x), ln_sinhc(-x));
        }
        assert!(ln_sinhc(1e6).is_finite());
    }

    #[test]
    fn langevin_is_derivative_of_ln_sinhc() {
        for &x in &[-3.0, -0.2, 0.0005, 0.01, 1.0, 7.5] {
            let h = 1e-5;
            let fd = (ln_sinhc(x + h) - ln_sinhc(x - h)) / (2.0 * h);
            assert!((langevin(x) - fd).abs() < 1e-8, "x={x}");
        }
    }

    #[test]
    fn ln_q_is_continuous_across_branches() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        for &x in &[-5.0f64, 30.0] {
            let lo = ln_q(x - 1e-9);
            let hi = ln_q(x + 1e-9);
            assert!((lo - hi).abs() < 1e-6, "x={x}: {lo} vs {hi}");
        }
        assert!(ln_q(100.0).is_finite());
        assert!((ln_q(-40.0)).abs() < 1e-300);
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
    }
}
