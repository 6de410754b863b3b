//! Deterministic-equivalent mean and variance of the mutual information.

use serde::Serialize;

use crate::channel::EffectiveSpectra;
use crate::error::{Error, Result};
use crate::rmt::canonical::{solve_canonical, FixedPoint, SolverConfig};

/// Which Γ enters the variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceVariant {
    /// `Γ_L`, the correction suited to small IRS sizes.
    SmallL,
    /// `Γ`, the large-L form (used by the gradient and DMT formulas).
    LargeL,
}

/// Normalized traces of powers of R, S, T against powers of their
/// resolvents `Q_R = (z + c R)^{-1}`, `Q_S = (δ^{-1} + ḡ S)^{-1}`,
/// `Q_T = (1 + g T)^{-1}` with `c = M g ḡ / (L δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceQuantities {
    pub gamma_r: f64,
    pub gamma_ri: f64,
    pub gamma_s: f64,
    pub gamma_si: f64,
    pub gamma_t: f64,
    pub gamma_ti: f64,
    pub eta_r: f64,
    pub eta_ri: f64,
    pub eta_s: f64,
    pub eta_si: f64,
    pub eta_t: f64,
    pub eta_ti: f64,
    pub psi_t: f64,
    pub delta_x: f64,
    pub delta_y: f64,
    pub big_gamma: f64,
    pub big_gamma_l: f64,
    /// `Tr Q_R`, needed for the derivative of the mean in z.
    pub tr_q_r: f64,
}

/// Mean (nats) and variance (nats²) of the Gaussian approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianMi {
    pub mean_nats: f64,
    pub var_nats2: f64,
    pub variant: VarianceVariant,
}

/// Moments `(1/D) Σ x^a q^b` for the (a, b) pairs used below.
struct Moments {
    x2q2: f64,
    x1q2: f64,
    x3q3: f64,
    x2q3: f64,
    x2q4: f64,
    q1: f64,
}

fn moments(xs: &[f64], norm: f64, q_of: impl Fn(f64) -> f64) -> Moments {
    let mut m = Moments { x2q2: 0.0, x1q2: 0.0, x3q3: 0.0, x2q3: 0.0, x2q4: 0.0, q1: 0.0 };
    for &x in xs {
        let q = q_of(x);
        let q2 = q * q;
        let q3 = q2 * q;
        m.x2q2 += x * x * q2;
        m.x1q2 += x * q2;
        m.x3q3 += x * x * x * q3;
        m.x2q3 += x * x * q3;
        m.x2q4 += x * x * q2 * q2;
        m.q1 += q;
    }
    m.x2q2 /= norm;
    m.x1q2 /= norm;
    m.x3q3 /= norm;
    m.x2q3 /= norm;
    m.x2q4 /= norm;
    m
}

/// Evaluates every trace quantity at a fixed point. Does not require the
/// fixed point to come from the solver, which allows degenerate spectra.
pub fn trace_quantities(spectra: &EffectiveSpectra, fp: &FixedPoint) -> Result<TraceQuantities> {
    let dims = spectra.dims();
    let (m, l) = (dims.m as f64, dims.l as f64);
    let z = 1.0 / spectra.rho;
    let (delta, g, gbar) = (fp.delta, fp.g, fp.gbar);
    let c = m * g * gbar / (l * delta);

    let mr = moments(&spectra.r, l, |r| 1.0 / (z + c * r));
    let ms = moments(&spectra.s, m, |s| 1.0 / (1.0 / delta + gbar * s));
    let mt = moments(&spectra.t, m, |t| 1.0 / (1.0 + g * t));

    let delta_y = 1.0 - ms.x2q2 * mt.x2q2;
    if !(delta_y > 0.0) {
        return Err(Error::regime(format!("1 - gamma_S gamma_T = {delta_y:e} is not positive")));
    }
    let pref = m / (l * delta * delta);
    let big_gamma = pref * (mt.x1q2 * mt.x1q2 * ms.x2q2 / delta_y + g * g * mt.x2q2);
    let big_gamma_l = big_gamma - ms.x2q2 * mt.x2q4 / (l * delta * delta * delta_y);
    let delta_x = 1.0 - mr.x2q2 * big_gamma;
    if !(delta_x > 0.0) {
        return Err(Error::regime(format!("1 - gamma_R Gamma = {delta_x:e} is not positive")));
    }

    Ok(TraceQuantities {
        gamma_r: mr.x2q2,
        gamma_ri: mr.x1q2,
        gamma_s: ms.x2q2,
        gamma_si: ms.x1q2,
        gamma_t: mt.x2q2,
        gamma_ti: mt.x1q2,
        eta_r: mr.x3q3,
        eta_ri: mr.x2q3,
        eta_s: ms.x3q3,
        eta_si: ms.x2q3,
        eta_t: mt.x3q3,
        eta_ti: mt.x2q3,
        psi_t: mt.x2q4,
        delta_x,
        delta_y,
        big_gamma,
        big_gamma_l,
        tr_q_r: mr.q1,
    })
}

/// Deterministic equivalent of the ergodic mutual information, in nats.
pub fn emi(spectra: &EffectiveSpectra, fp: &FixedPoint) -> f64 {
    let dims = spectra.dims();
    let (m, l) = (dims.m as f64, dims.l as f64);
    let rho = spectra.rho;
    let (delta, g, gbar) = (fp.delta, fp.g, fp.gbar);
    let c = m * g * gbar / (l * delta);
    let a: f64 = spectra.r.iter().map(|&r| (rho * c * r).ln_1p()).sum();
    let b: f64 = spectra.s.iter().map(|&s| (delta * gbar * s).ln_1p()).sum();
    let d: f64 = spectra.t.iter().map(|&t| (g * t).ln_1p()).sum();
    a + b + d - 2.0 * m * g * gbar
}

/// `-log(1 - γ_R Γ_•) - log(1 - γ_S γ_T)`.
pub fn variance(tq: &TraceQuantities, variant: VarianceVariant) -> Result<f64> {
    let gamma = match variant {
        VarianceVariant::SmallL => tq.big_gamma_l,
        VarianceVariant::LargeL => tq.big_gamma,
    };
    let ax = 1.0 - tq.gamma_r * gamma;
    let ay = 1.0 - tq.gamma_s * tq.gamma_t;
    if !(ax > 0.0) || !(ay > 0.0) {
        return Err(Error::regime(format!(
            "variance log arguments not positive ({ax:e}, {ay:e})"
        )));
    }
    Ok(-ax.ln() - ay.ln())
}

/// Everything the downstream modules need from one solve.
#[derive(Debug, Clone)]
pub struct MiAnalysis {
    pub fixed_point: FixedPoint,
    pub traces: TraceQuantities,
    pub mi: GaussianMi,
}

impl MiAnalysis {
    pub fn from_fixed_point(spectra: &EffectiveSpectra, fp: FixedPoint, variant: VarianceVariant) -> Result<Self> {
        let traces = trace_quantities(spectra, &fp)?;
        let var = variance(&traces, variant)?;
        let mean = emi(spectra, &fp);
        Ok(Self {
            fixed_point: fp,
            traces,
            mi: GaussianMi { mean_nats: mean, var_nats2: var, variant },
        })
    }

    /// Variance under the other Γ choice, if defined.
    pub fn variance_with(&self, variant: VarianceVariant) -> Result<f64> {
        variance(&self.traces, variant)
    }
}

/// Solves the canonical system and evaluates mean and variance.
pub fn gaussian_mi(spectra: &EffectiveSpectra, cfg: &SolverConfig, variant: VarianceVariant) -> Result<MiAnalysis> {
    let fp = solve_canonical(spectra, cfg)?;
    MiAnalysis::from_fixed_point(spectra, fp, variant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::SystemDims;

    fn solve(sp: &EffectiveSpectra) -> FixedPoint {
        solve_canonical(sp, &SolverConfig::default()).unwrap()
    }

    #[test]
    fn identity_reduced_traces() {
        let (m, l, rho) = (4usize, 12usize, 7.0);
        let sp = EffectiveSpectra::identity(SystemDims::new(m, m, l).unwrap(), rho).unwrap();
        let fp = solve(&sp);
        let tq = trace_quantities(&sp, &fp).unwrap();
        let tau = m as f64 / l as f64;
        assert!((tq.gamma_t - fp.gbar * fp.gbar).abs() < 1e-12);
        assert!((tq.gamma_s - tau * fp.g * fp.g).abs() < 1e-11);
        assert!((tq.gamma_r - fp.delta * fp.delta / tau).abs() < 1e-10 * tq.gamma_r.max(1.0));
    }

    #[test]
    fn zero_s_spectrum() {
        let sp = EffectiveSpectra::new(vec![1.0; 3], vec![0.0; 5], vec![1.0; 3], 2.0).unwrap();
        let fp = FixedPoint {
            delta: 0.5,
            g: 0.0,
            gbar: 1.0,
            residual: 0.0,
            iterations_outer: 0,
            iterations_inner: 0,
            delta_trace: vec![],
        };
        let tq = trace_quantities(&sp, &fp).unwrap();
        assert_eq!(tq.gamma_s, 0.0);
        assert_eq!(tq.delta_y, 1.0);
        assert_eq!(tq.big_gamma, 0.0);
        assert_eq!(variance(&tq, VarianceVariant::LargeL).unwrap(), 0.0);
    }

    #[test]
    fn emi_identity_square_unit_snr() {
        let sp = EffectiveSpectra::identity(SystemDims::new(5, 5, 5).unwrap(), 1.0).unwrap();
        let fp = solve(&sp);
        let g = fp.g;
        let per_antenna = 3.0 * (1.0 + g).ln() - 2.0 * g / (1.0 + g);
        assert!((emi(&sp, &fp) / 5.0 - per_antenna).abs() < 1e-10);
        assert!((per_antenna - 0.5115).abs() < 2e-4);
    }

    #[test]
    fn emi_vanishes_at_low_snr() {
        let sp = EffectiveSpectra::identity(SystemDims::new(3, 3, 6).unwrap(), 1e-10).unwrap();
        let fp = solve(&sp);
        assert!(emi(&sp, &fp).abs() < 1e-8);
    }

    #[test]
    fn gamma_l_approaches_gamma() {
        // per-element spectral profiles fixed, all dimensions growing together
        let profile = |len: usize| -> Vec<f64> { (0..len).map(|i| 0.5 + (i % 4) as f64 * 0.25).collect() };
        let mut gaps = Vec::new();
        for l in [100usize, 1000, 10000] {
            let sp = EffectiveSpectra::new(profile(l / 4), profile(l), profile(l / 4), 3.0).unwrap();
            let tq = trace_quantities(&sp, &solve(&sp)).unwrap();
            gaps.push((l as f64, (tq.big_gamma - tq.big_gamma_l).abs()));
        }
        let slope = (gaps[2].1.ln() - gaps[0].1.ln()) / (gaps[2].0.ln() - gaps[0].0.ln());
        assert!(slope < -0.9, "slope {slope}");
    }

    #[test]
    fn variance_positive_on_correlated_spectra() {
        let sp = EffectiveSpectra::new(vec![1.6, 0.9, 0.4], vec![2.2, 1.1, 0.6, 0.1], vec![1.3, 0.7], 20.0).unwrap();
        let a = gaussian_mi(&sp, &SolverConfig::default(), VarianceVariant::SmallL).unwrap();
        assert!(a.mi.var_nats2 > 0.0);
        let big = a.variance_with(VarianceVariant::LargeL).unwrap();
        assert!(big >= a.mi.var_nats2);
    }
}
