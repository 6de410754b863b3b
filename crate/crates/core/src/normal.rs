//! Standard normal distribution helpers.

use statrs::function::erf::erfc_inv;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Φ(x) through the complementary error function, so both tails keep
/// full relative accuracy.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// ln Φ(x), finite far below the point where Φ underflows.
pub fn log_norm_cdf(x: f64) -> f64 {
    if x > -30.0 {
        return norm_cdf(x).ln();
    }
    // Mills-ratio series: Φ(x) = φ(x)/|x| · (1 − 1/x² + 3/x⁴ − 15/x⁶ + ...)
    let x2 = x * x;
    let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2) + 105.0 / (x2 * x2 * x2 * x2);
    -0.5 * x2 - LN_SQRT_2PI - (-x).ln() + series.ln()
}

/// φ(x)/Φ(x), computed without forming either factor in the far left tail.
pub fn norm_hazard_left(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI - log_norm_cdf(x)).exp()
}

/// Φ⁻¹(p) for p in (0, 1), refined by one Newton step on Φ.
pub fn norm_inv_cdf(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "probability {p} outside (0, 1)");
    let mut x = -SQRT_2 * erfc_inv(2.0 * p);
    for _ in 0..2 {
        let pdf = norm_pdf(x);
        if pdf <= 0.0 {
            break;
        }
        let err = if x < 0.0 { norm_cdf(x) - p } else { (1.0 - p) - norm_cdf(-x) };
        x -= err / pdf;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert!((norm_cdf(-2.0) - 0.022_750_131_948_179_2).abs() < 1e-15);
        assert!((norm_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((norm_pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-16);
    }

    #[test]
    fn log_cdf_continuous_at_switch() {
        let a = log_norm_cdf(-30.0 + 1e-9);
        let b = log_norm_cdf(-30.0 - 1e-9);
        assert!((a - b).abs() < 1e-6, "{a} {b}");
        assert!(log_norm_cdf(-100.0).is_finite());
        assert!(log_norm_cdf(-100.0) < log_norm_cdf(-99.0));
    }

    #[test]
    fn inverse_round_trip() {
        for &p in &[1e-300, 1e-12, 1e-6, 0.0227501, 0.3, 0.5, 0.9, 1.0 - 1e-6] {
            let x = norm_inv_cdf(p);
            assert!((norm_cdf(x) - p).abs() <= 1e-12 * p.max(1e-3), "{p}");
        }
        assert!((norm_inv_cdf(0.022_750_131_948_179_2) + 2.0).abs() < 1e-12);
    }
}
