//! Diversity–multiplexing tradeoff at finite SNR.
//!
//! With `m = kR/Ī` held fixed, `P_out = Φ(x)` where `x = (m − k)H/k` and
//! `H(z) = Ī(z)/√V(z)`, `z = 1/ρ`. The diversity is
//! `d = −∂ ln P_out / ∂ ln ρ = z (m − k) H'(z) φ(x) / (k Φ(x))`.

use serde::Serialize;

use crate::channel::EffectiveSpectra;
use crate::error::{Error, Result};
use crate::normal::{log_norm_cdf, norm_hazard_left};
use crate::rmt::{
    gaussian_mi, variance_derivative, ExplicitTerms, SensitivitySystem, SolverConfig, VarianceVariant,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DmtPoint {
    pub m: f64,
    pub d: f64,
    pub k: usize,
    pub h: f64,
    pub h_prime: f64,
    pub z: f64,
}

/// `H(z)` and `H'(z)` at the spectra's SNR (Γ-variant variance).
pub fn h_and_derivative(spectra: &EffectiveSpectra, cfg: &SolverConfig) -> Result<(f64, f64)> {
    let an = gaussian_mi(spectra, cfg, VarianceVariant::LargeL)?;
    let (fp, tq) = (&an.fixed_point, &an.traces);
    let n = spectra.r.len() as f64;
    let z = 1.0 / spectra.rho;

    let sys = SensitivitySystem::new(spectra, fp, tq);
    let p = sys.solve([-fp.delta * tq.gamma_ri, 0.0, 0.0])?;
    let di = -n / z + tq.tr_q_r;
    let explicit = ExplicitTerms { gamma_r: -2.0 * tq.eta_ri, gamma_s: 0.0 };
    let dv = variance_derivative(spectra, fp, tq, p, explicit);

    let (i, v) = (an.mi.mean_nats, an.mi.var_nats2);
    let h = i / v.sqrt();
    let h_prime = (di * v - 0.5 * i * dv) / v.powf(1.5);
    Ok((h, h_prime))
}

fn check_m(m: f64, k: usize) -> Result<()> {
    if !(m >= 0.0 && m <= k as f64) {
        return Err(Error::invalid(format!("multiplexing gain {m} outside [0, {k}]")));
    }
    Ok(())
}

/// Finite-SNR diversity at multiplexing gain `m ∈ [0, k]`, `k = min(L, M, N)`.
pub fn finite_snr_dmt(m: f64, spectra: &EffectiveSpectra, cfg: &SolverConfig) -> Result<DmtPoint> {
    let k = spectra.dims().k();
    check_m(m, k)?;
    let (h, h_prime) = h_and_derivative(spectra, cfg)?;
    let z = 1.0 / spectra.rho;
    let kf = k as f64;
    let d = if m == kf {
        0.0
    } else {
        let x = (m - kf) * h / kf;
        z * (m - kf) * h_prime * norm_hazard_left(x) / kf
    };
    Ok(DmtPoint { m, d, k, h, h_prime, z })
}

/// `−z (m − k)² H H' / k²`, the large-|x| form of [`finite_snr_dmt`].
pub fn dmt_quick_approx(m: f64, spectra: &EffectiveSpectra, cfg: &SolverConfig) -> Result<f64> {
    let k = spectra.dims().k();
    check_m(m, k)?;
    let (h, h_prime) = h_and_derivative(spectra, cfg)?;
    let kf = k as f64;
    Ok(-(m - kf).powi(2) * h * h_prime / (spectra.rho * kf * kf))
}

/// Central difference of `−ln P_out` against `ln ρ` with `m` fixed, using
/// SNR offsets of `±h_db` decibels.
pub fn dmt_numeric_slope(m: f64, spectra: &EffectiveSpectra, cfg: &SolverConfig, h_db: f64) -> Result<f64> {
    let k = spectra.dims().k();
    check_m(m, k)?;
    let kf = k as f64;
    let log_p = |rho: f64| -> Result<f64> {
        let an = gaussian_mi(&spectra.with_rho(rho)?, cfg, VarianceVariant::LargeL)?;
        let h = an.mi.mean_nats / an.mi.var_nats2.sqrt();
        Ok(log_norm_cdf((m - kf) * h / kf))
    };
    let f = 10f64.powf(h_db / 10.0);
    let (up, dn) = (spectra.rho * f, spectra.rho / f);
    Ok(-(log_p(up)? - log_p(dn)?) / (up.ln() - dn.ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{effective_spectra, CorrelationSet, PhaseShifts, SystemDims};

    fn dmt_spectra(rho: f64) -> EffectiveSpectra {
        let dims = SystemDims::new(4, 4, 2).unwrap();
        let corr = CorrelationSet::exponential(dims, 0.5, 0.5, 0.5, 0.5).unwrap();
        effective_spectra(&corr, &PhaseShifts::zeros(2), rho).unwrap()
    }

    #[test]
    fn endpoint_is_zero() {
        let sp = dmt_spectra(10.0);
        let p = finite_snr_dmt(2.0, &sp, &SolverConfig::default()).unwrap();
        assert_eq!(p.k, 2);
        assert_eq!(p.d, 0.0);
        assert_eq!(dmt_quick_approx(2.0, &sp, &SolverConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn h_prime_negative_and_d_nonnegative() {
        for rho in [1.0, 10.0, 100.0] {
            let sp = dmt_spectra(rho);
            for m in [0.0, 0.5, 1.0, 1.5] {
                let p = finite_snr_dmt(m, &sp, &SolverConfig::default()).unwrap();
                assert!(p.h_prime < 0.0);
                assert!(p.d >= 0.0);
            }
        }
    }

    #[test]
    fn continuity_in_m() {
        let sp = dmt_spectra(10.0);
        let cfg = SolverConfig::default();
        for m in [0.2, 1.0, 1.7] {
            let a = finite_snr_dmt(m, &sp, &cfg).unwrap().d;
            let b = finite_snr_dmt(m + 1e-6, &sp, &cfg).unwrap().d;
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn matches_numeric_slope() {
        let sp = dmt_spectra(10.0);
        let cfg = SolverConfig::default();
        for frac in [0.25, 0.5, 0.75] {
            let m = 2.0 * frac;
            let d = finite_snr_dmt(m, &sp, &cfg).unwrap().d;
            let s = dmt_numeric_slope(m, &sp, &cfg, 0.1).unwrap();
            assert!((d - s).abs() <= 0.02 * s.abs(), "{m}: {d} vs {s}");
        }
    }

    #[test]
    fn rejects_out_of_range_m() {
        let sp = dmt_spectra(10.0);
        assert!(finite_snr_dmt(2.5, &sp, &SolverConfig::default()).is_err());
        assert!(finite_snr_dmt(-0.1, &sp, &SolverConfig::default()).is_err());
    }
}
