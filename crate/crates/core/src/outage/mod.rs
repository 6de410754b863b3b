//! Outage probability, finite-SNR DMT and IRS sizing from the Gaussian
//! approximation of the mutual information.

pub mod dmt;
pub mod sizing;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::normal::{log_norm_cdf, norm_cdf, norm_inv_cdf};

pub use dmt::{dmt_numeric_slope, dmt_quick_approx, finite_snr_dmt, DmtPoint};
pub use sizing::{irs_efficiency, min_irs_size, SizingAnswer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutageResult {
    pub p_out: f64,
    /// ln P_out; stays finite when `p_out` underflows.
    pub log_p_out: f64,
    pub rate_threshold_nats: f64,
    pub mean_nats: f64,
    pub var_nats2: f64,
}

fn check_var(var: f64) -> Result<()> {
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::invalid(format!("variance must be positive, got {var}")));
    }
    Ok(())
}

/// `Φ((R − Ī)/√V)`.
pub fn outage_probability(mean_nats: f64, var_nats2: f64, rate_nats: f64) -> Result<f64> {
    check_var(var_nats2)?;
    Ok(norm_cdf((rate_nats - mean_nats) / var_nats2.sqrt()))
}

pub fn outage(mean_nats: f64, var_nats2: f64, rate_nats: f64) -> Result<OutageResult> {
    check_var(var_nats2)?;
    let x = (rate_nats - mean_nats) / var_nats2.sqrt();
    Ok(OutageResult {
        p_out: norm_cdf(x),
        log_p_out: log_norm_cdf(x),
        rate_threshold_nats: rate_nats,
        mean_nats,
        var_nats2,
    })
}

/// Rate supported with outage probability `p_out`: `Ī + √V Φ⁻¹(p_out)`.
pub fn outage_rate(mean_nats: f64, var_nats2: f64, p_out: f64) -> Result<f64> {
    check_var(var_nats2)?;
    if !(p_out > 0.0 && p_out < 1.0) {
        return Err(Error::invalid(format!("outage probability must lie in (0, 1), got {p_out}")));
    }
    Ok(mean_nats + var_nats2.sqrt() * norm_inv_cdf(p_out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centre_and_two_sigma() {
        assert_eq!(outage_probability(3.0, 0.5, 3.0).unwrap(), 0.5);
        let p = outage_probability(3.0, 0.25, 2.0).unwrap();
        assert!((p - 0.022_750_131_948_179_2).abs() < 1e-15);
        let r = outage_rate(3.0, 0.25, 0.022_750_131_948_179_2).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        assert_eq!(outage_rate(3.0, 0.25, 0.5).unwrap(), 3.0);
    }

    #[test]
    fn reflection() {
        for x in [0.1, 0.7, 2.3, 5.0] {
            let a = outage_probability(1.0, 2.0, 1.0 + x).unwrap();
            let b = outage_probability(1.0, 2.0, 1.0 - x).unwrap();
            assert!((a + b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(outage_probability(1.0, 0.0, 1.0).is_err());
        assert!(outage_rate(1.0, 1.0, 0.0).is_err());
        assert!(outage_rate(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn deep_tail_log_is_finite() {
        let o = outage(100.0, 1.0, 0.0).unwrap();
        assert_eq!(o.p_out, 0.0);
        assert!(o.log_p_out.is_finite() && o.log_p_out < -4000.0);
    }
}
