//! Closed forms for i.i.d. (identity-correlation) channels with `M = N`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

fn cubic(g: f64, tau: f64, rho: f64) -> f64 {
    ((g + 2.0) * g + (1.0 + rho * tau - rho)) * g - rho
}

fn cubic_prime(g: f64, tau: f64, rho: f64) -> f64 {
    (3.0 * g + 4.0) * g + (1.0 + rho * tau - rho)
}

/// The three roots of `g³ + 2g² + (1 + ρτ − ρ)g − ρ = 0` from Cardano's
/// formula, in branch order m = 0, 1, 2.
pub fn cardano_roots(tau: f64, rho: f64) -> [Complex64; 3] {
    // g = x − 2/3 gives x³ + p x + q = 0 with
    // 3p = 3ρτ − 3ρ − 1 and −27q/2 = 1 + 9ρ/2 + 9ρτ
    let three_p = 3.0 * rho * tau - 3.0 * rho - 1.0;
    let w0 = 1.0 + 4.5 * rho + 9.0 * rho * tau;
    let disc = three_p.powi(3) + w0 * w0;
    let omega3 = Complex64::new(disc, 0.0).sqrt() + w0;
    let omega = omega3.powf(1.0 / 3.0);
    let omega_star = Complex64::new(-three_p, 0.0) / omega;
    let eps = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for (m, slot) in out.iter_mut().enumerate() {
        let e = eps.powu(m as u32);
        *slot = (e * omega + e.conj() * omega_star - 2.0) / 3.0;
    }
    out
}

/// Safeguarded bisection for the positive root.
pub fn iid_g_bisection(tau: f64, rho: f64) -> f64 {
    // g(1+g)^2 = ρ(1 + (1−τ)g) bounds the root by max(1, √ρ)
    let (mut lo, mut hi) = (0.0f64, rho.sqrt().max(1.0) + 1.0);
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cubic(mid, tau, rho) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn validate(tau: f64, rho: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::invalid(format!("tau must be positive, got {tau}")));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::invalid(format!("rho must be positive, got {rho}")));
    }
    Ok(())
}

/// Positive root `g` of the i.i.d. cubic via Cardano, with Newton polishing
/// and a bisection fallback when no candidate passes the residual check.
pub fn iid_g(tau: f64, rho: f64) -> Result<f64> {
    validate(tau, rho)?;
    let scale = |g: f64| g.powi(3) + 2.0 * g * g + (1.0 + rho * tau - rho).abs() * g + rho;
    let mut best: Option<f64> = None;
    for root in cardano_roots(tau, rho) {
        if root.im.abs() > 1e-6 * (1.0 + root.re.abs()) {
            continue;
        }
        let mut g = root.re;
        for _ in 0..3 {
            let d = cubic_prime(g, tau, rho);
            if d == 0.0 {
                break;
            }
            g -= cubic(g, tau, rho) / d;
        }
        if g > 0.0 && 1.0 + (1.0 - tau) * g > 0.0 && cubic(g, tau, rho).abs() <= 1e-10 * scale(g) {
            best = Some(g);
            break;
        }
    }
    Ok(best.unwrap_or_else(|| {
        log::debug!("Cardano root rejected at tau={tau}, rho={rho}; using bisection");
        iid_g_bisection(tau, rho)
    }))
}

/// Mean of the mutual information for i.i.d. channels, in nats.
pub fn iid_emi(n: usize, tau: f64, rho: f64) -> Result<f64> {
    let g = iid_g(tau, rho)?;
    Ok(iid_emi_at(n, tau, rho, g))
}

pub(crate) fn iid_emi_at(n: usize, tau: f64, rho: f64, g: f64) -> f64 {
    let n = n as f64;
    2.0 * n * g.ln_1p() + (n / tau) * (tau * rho / ((1.0 + g) * (1.0 + g))).ln_1p() - 2.0 * n * g / (1.0 + g)
}

/// Variance of the mutual information for i.i.d. channels, in nats².
pub fn iid_variance(rho: f64, g: f64) -> f64 {
    (rho * (1.0 + g) * (1.0 + g)).ln() - (rho + 2.0 * g.powi(3) + 2.0 * g * g).ln()
}

/// Infinite-IRS limit, identical to a single-hop i.i.d. Rayleigh link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticLimit {
    /// Positive root of `δ² + δ − ρ = 0`.
    pub delta: f64,
    pub mean_nats: f64,
    pub var_nats2: f64,
}

pub fn asymptotic_limit(n: usize, rho: f64) -> Result<AsymptoticLimit> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::invalid(format!("rho must be positive, got {rho}")));
    }
    // 2ρ / (1 + √(1+4ρ)) avoids cancellation at small ρ
    let delta = 2.0 * rho / (1.0 + (1.0 + 4.0 * rho).sqrt());
    let n = n as f64;
    Ok(AsymptoticLimit {
        delta,
        mean_nats: n * (delta + 1.0 + rho).ln() - n * delta / (1.0 + delta),
        var_nats2: ((1.0 + delta) * (1.0 + delta) / (2.0 * delta + 1.0)).ln(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HighSnrRegime {
    /// IRS much smaller than √ρ.
    SmallL,
    /// IRS comparable with or larger than √ρ.
    LargeL,
}

/// High-SNR expansions of mean (nats) and variance (nats²) for `M = N`.
pub fn high_snr_approx(n: usize, l: usize, rho: f64, regime: HighSnrRegime) -> Result<(f64, f64)> {
    if n == 0 || l == 0 {
        return Err(Error::invalid("antenna and IRS counts must be positive"));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::invalid(format!("rho must be positive, got {rho}")));
    }
    let tau = n as f64 / l as f64;
    if tau >= 1.0 {
        return Err(Error::invalid(format!("high-SNR expansion needs N < L (tau = {tau})")));
    }
    if rho < 100.0 {
        log::warn!("high-SNR expansion used at rho = {rho}, below its regime of validity");
    }
    let nf = n as f64;
    let inv_sqrt = 1.0 / rho.sqrt();
    Ok(match regime {
        HighSnrRegime::SmallL => {
            let a = (1.0 - tau).sqrt();
            let b = 1.0 / (2.0 * (1.0 - tau)) - 1.0;
            let mean = nf * (rho.ln() - 2.0 - (1.0 / tau - 1.0) * (-tau).ln_1p() + 2.0 / a * inv_sqrt);
            let var = 0.5 * (rho / (4.0 * a * a)).ln() + (2.0 * a * a * (1.0 - b) - 1.0) / (2.0 * a.powi(3)) * inv_sqrt;
            (mean, var)
        }
        HighSnrRegime::LargeL => {
            let mean = nf * (rho.ln() - 1.0 - tau / 2.0 + 2.0 * inv_sqrt);
            let var = 0.5 * (rho / 4.0).ln() + tau / 2.0 + inv_sqrt;
            (mean, var)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_unit_snr_root() {
        let g = iid_g(1.0, 1.0).unwrap();
        assert!((g - iid_g_bisection(1.0, 1.0)).abs() < 1e-14);
        assert!((g * (1.0 + g) * (1.0 + g) - 1.0).abs() < 1e-13);
        assert!((g - 0.46557).abs() < 1e-5);
    }

    #[test]
    fn small_tau_quadratic_limit() {
        let g = iid_g(1e-12, 2.0).unwrap();
        assert!((g - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cardano_branches_are_roots() {
        for (tau, rho) in [(0.3, 5.0), (1.0, 0.2), (0.9, 1e4), (2.0, 3.0)] {
            for r in cardano_roots(tau, rho) {
                let f = ((r + 2.0) * r + (1.0 + rho * tau - rho)) * r - rho;
                assert!(f.norm() < 1e-8 * (1.0 + rho), "{tau} {rho} {r} {f}");
            }
        }
    }

    #[test]
    fn emi_matches_reference_values() {
        let g = iid_g_bisection(1.0, 1.0);
        let exact = 3.0 * g.ln_1p() - 2.0 * g / (1.0 + g);
        assert!((iid_emi(1, 1.0, 1.0).unwrap() - exact).abs() < 1e-14);
        assert!((exact - 0.5115).abs() < 2e-4);
        assert!(iid_emi(3, 0.5, 1e-12).unwrap().abs() < 1e-10);
        let lim = 2.0 * 2f64.ln() - 0.5;
        assert!((iid_emi(1, 1e-9, 2.0).unwrap() - lim).abs() < 1e-6);
    }

    #[test]
    fn asymptotic_limit_at_rho_two() {
        let a = asymptotic_limit(3, 2.0).unwrap();
        assert!((a.delta - 1.0).abs() < 1e-15);
        assert!((a.mean_nats - 3.0 * (4f64.ln() - 0.5)).abs() < 1e-14);
        assert!((a.var_nats2 - (4.0f64 / 3.0).ln()).abs() < 1e-15);
        let small = asymptotic_limit(2, 1e-12).unwrap();
        assert!(small.delta < 1e-11 && small.mean_nats.abs() < 1e-11 && small.var_nats2 < 1e-11);
    }

    #[test]
    fn iid_variance_at_quadratic_limit() {
        assert!((iid_variance(2.0, 1.0) - (4.0f64 / 3.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn high_snr_single_hop_limit() {
        let rho = 1e5;
        let (mean, var) = high_snr_approx(3, 1_000_000_000_000, rho, HighSnrRegime::LargeL).unwrap();
        let single = 3.0 * ((rho / std::f64::consts::E).ln() + 2.0 / rho.sqrt());
        assert!((mean - single).abs() < 1e-9);
        assert!((var - (0.5 * (rho / 4.0).ln() + 1.0 / rho.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn high_snr_large_l_tracks_exact() {
        let (mean, _) = high_snr_approx(4, 64, 1e5, HighSnrRegime::LargeL).unwrap();
        let exact = iid_emi(4, 4.0 / 64.0, 1e5).unwrap();
        assert!((mean - exact).abs() / exact < 0.01);
    }

    #[test]
    fn high_snr_large_l_size_term() {
        let (a, _) = high_snr_approx(4, 64, 1e5, HighSnrRegime::LargeL).unwrap();
        let (b, _) = high_snr_approx(4, 128, 1e5, HighSnrRegime::LargeL).unwrap();
        let expected = 4.0 * (4.0 / 2.0) * (1.0 / 64.0 - 1.0 / 128.0);
        assert!(((b - a) - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_domain() {
        assert!(iid_g(0.0, 1.0).is_err());
        assert!(iid_g(1.0, -1.0).is_err());
        assert!(high_snr_approx(4, 4, 1e5, HighSnrRegime::SmallL).is_err());
    }
}
