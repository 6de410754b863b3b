//! Correlated cascaded Rayleigh channel description: dimensions, correlation
//! matrices, IRS phase shifts, link budget, and the effective spectra
//! `r = eig(R1)`, `s = eig(T1^½ Ψ R2 Ψ^H T1^½)`, `t = eig(T2)` that every
//! deterministic-equivalent formula consumes.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

const TWO_PI: f64 = 2.0 * PI;
const HERMITIAN_TOL: f64 = 1e-12;

/// Antenna counts: `m` transmit (BS), `n` receive (UE), `l` IRS elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDims {
    pub m: usize,
    pub n: usize,
    pub l: usize,
}

impl SystemDims {
    pub fn new(m: usize, n: usize, l: usize) -> Result<Self> {
        if m == 0 || n == 0 || l == 0 {
            return Err(Error::invalid(format!(
                "dimensions must be positive, got M={m}, N={n}, L={l}"
            )));
        }
        Ok(Self { m, n, l })
    }

    /// `τ = M / L`.
    pub fn tau(&self) -> f64 {
        self.m as f64 / self.l as f64
    }

    /// `k = min(L, M, N)`, the multiplexing ceiling.
    pub fn k(&self) -> usize {
        self.l.min(self.m).min(self.n)
    }
}

/// Exponential correlation model, `[C(μ)]_{ij} = μ^{|i-j|}`.
pub fn exponential_correlation(n: usize, mu: f64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::invalid("correlation dimension must be positive"));
    }
    if !(0.0..1.0).contains(&mu) {
        return Err(Error::invalid(format!(
            "exponential correlation coefficient must lie in [0, 1), got {mu}"
        )));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| mu.powi(i.abs_diff(j) as i32)))
}

/// The four correlation matrices of the two hops:
/// `H1 = R1^½ X T1^½` (IRS to UE) and `H2 = R2^½ Y T2^½` (BS to IRS).
#[derive(Debug, Clone)]
pub struct CorrelationSet {
    r1: CMat,
    t1: CMat,
    r2: CMat,
    t2: CMat,
}

impl CorrelationSet {
    /// Validates shapes, Hermitian symmetry and positive semi-definiteness.
    pub fn new(r1: CMat, t1: CMat, r2: CMat, t2: CMat) -> Result<Self> {
        let set = Self { r1, t1, r2, t2 };
        let dims = set.dims()?;
        if set.r2.nrows() != dims.l || set.r2.ncols() != dims.l {
            return Err(Error::invalid("R2 must be L x L with L = dim(T1)"));
        }
        for (name, m) in set.named() {
            if m.nrows() != m.ncols() {
                return Err(Error::invalid(format!("{name} must be square")));
            }
            let defect = linalg::hermitian_defect(m);
            let scale = m.norm().max(1.0);
            if defect > HERMITIAN_TOL * scale {
                return Err(Error::invalid(format!(
                    "{name} is not Hermitian (defect {defect:e})"
                )));
            }
            let (mut values, _) = linalg::hermitian_eigen(m)?;
            linalg::clip_psd(&mut values, name)?;
        }
        Ok(set)
    }

    pub fn identity(dims: SystemDims) -> Self {
        Self {
            r1: CMat::identity(dims.n, dims.n),
            t1: CMat::identity(dims.l, dims.l),
            r2: CMat::identity(dims.l, dims.l),
            t2: CMat::identity(dims.m, dims.m),
        }
    }

    /// Exponential model on each matrix with its own coefficient.
    pub fn exponential(dims: SystemDims, mu_r1: f64, mu_t1: f64, mu_r2: f64, mu_t2: f64) -> Result<Self> {
        Ok(Self {
            r1: linalg::to_complex(&exponential_correlation(dims.n, mu_r1)?),
            t1: linalg::to_complex(&exponential_correlation(dims.l, mu_t1)?),
            r2: linalg::to_complex(&exponential_correlation(dims.l, mu_r2)?),
            t2: linalg::to_complex(&exponential_correlation(dims.m, mu_t2)?),
        })
    }

    pub fn dims(&self) -> Result<SystemDims> {
        SystemDims::new(self.t2.nrows(), self.r1.nrows(), self.t1.nrows())
    }

    pub fn r1(&self) -> &CMat {
        &self.r1
    }
    pub fn t1(&self) -> &CMat {
        &self.t1
    }
    pub fn r2(&self) -> &CMat {
        &self.r2
    }
    pub fn t2(&self) -> &CMat {
        &self.t2
    }

    fn named(&self) -> [(&'static str, &CMat); 4] {
        [("R1", &self.r1), ("T1", &self.t1), ("R2", &self.r2), ("T2", &self.t2)]
    }
}

/// IRS phase shifts. Angles are wrapped to `[0, 2π)` on construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseShifts {
    theta: Vec<f64>,
}

pub fn wrap_angle(x: f64) -> f64 {
    let w = x.rem_euclid(TWO_PI);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if w >= TWO_PI {
        0.0
    } else {
        w
    }
}

impl PhaseShifts {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::invalid("phase vector must be non-empty"));
        }
        if let Some(bad) = theta.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite phase {bad}")));
        }
        Ok(Self {
            theta: theta.into_iter().map(wrap_angle).collect(),
        })
    }

    /// `Ψ = I`.
    pub fn zeros(l: usize) -> Self {
        Self { theta: vec![0.0; l] }
    }

    /// `ψ_i = exp(j 2π i / L)`, `i = 1..L`.
    pub fn ramp(l: usize) -> Self {
        Self {
            theta: (1..=l).map(|i| wrap_angle(TWO_PI * i as f64 / l as f64)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.theta
    }

    /// Diagonal of `Ψ`.
    pub fn psi(&self) -> Vec<Complex64> {
        self.theta.iter().map(|&t| Complex64::from_polar(1.0, t)).collect()
    }
}

/// Distance-dependent path loss `C0 (d / 1 m)^{-α}` as a linear power gain.
pub fn path_loss(d: f64, alpha: f64, c0_db: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::invalid(format!("distance must be positive, got {d}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!("path-loss exponent must be positive, got {alpha}")));
    }
    Ok(db_to_linear(c0_db) * d.powf(-alpha))
}

pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub p_dbm: f64,
    pub sigma2_dbm: f64,
    pub d_bs_irs: f64,
    pub d_irs_ue: f64,
    pub alpha_bs_irs: f64,
    pub alpha_irs_ue: f64,
    pub c0_db: f64,
}

impl LinkBudget {
    /// Distances and exponents used in the reference simulation setup:
    /// 10 m per hop, exponents 2 (BS-IRS) and 3 (IRS-UE), C0 = -30 dB.
    pub fn reference(p_dbm: f64, sigma2_dbm: f64) -> Self {
        Self {
            p_dbm,
            sigma2_dbm,
            d_bs_irs: 10.0,
            d_irs_ue: 10.0,
            alpha_bs_irs: 2.0,
            alpha_irs_ue: 3.0,
            c0_db: -30.0,
        }
    }

    /// `ρ_eff = P / (M σ²) · PL(d_bs_irs) · PL(d_irs_ue)`.
    pub fn effective_snr(&self, dims: SystemDims) -> Result<f64> {
        let gain = path_loss(self.d_bs_irs, self.alpha_bs_irs, self.c0_db)?
            * path_loss(self.d_irs_ue, self.alpha_irs_ue, self.c0_db)?;
        Ok(db_to_linear(self.p_dbm) / (dims.m as f64 * db_to_linear(self.sigma2_dbm)) * gain)
    }
}

/// Eigenvalues (descending, clipped at zero) of the three effective
/// correlation matrices together with the linear SNR they are used at.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveSpectra {
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub rho: f64,
}

impl EffectiveSpectra {
    /// Builds spectra directly, e.g. for i.i.d. studies.
    pub fn new(mut r: Vec<f64>, mut s: Vec<f64>, mut t: Vec<f64>, rho: f64) -> Result<Self> {
        if r.is_empty() || s.is_empty() || t.is_empty() {
            return Err(Error::invalid("spectra must be non-empty"));
        }
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::invalid(format!("SNR must be positive and finite, got {rho}")));
        }
        for (name, v) in [("r", &mut r), ("s", &mut s), ("t", &mut t)] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("non-finite entry in spectrum {name}")));
            }
            linalg::clip_psd(v, name)?;
            v.sort_by(|a, b| b.total_cmp(a));
        }
        Ok(Self { r, s, t, rho })
    }

    pub fn identity(dims: SystemDims, rho: f64) -> Result<Self> {
        Self::new(vec![1.0; dims.n], vec![1.0; dims.l], vec![1.0; dims.m], rho)
    }

    pub fn dims(&self) -> SystemDims {
        SystemDims { m: self.t.len(), n: self.r.len(), l: self.s.len() }
    }

    /// Same spectra at another SNR.
    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::new(self.r.clone(), self.s.clone(), self.t.clone(), rho)
    }
}

/// `Ψ R2 Ψ^H`, entry `(p, q)` is `ψ_p [R2]_{pq} conj(ψ_q)`.
pub(crate) fn rotate_r2(r2: &CMat, psi: &[Complex64]) -> CMat {
    CMat::from_fn(r2.nrows(), r2.ncols(), |p, q| psi[p] * r2[(p, q)] * psi[q].conj())
}

/// `S = T1^½ Ψ R2 Ψ^H T1^½`, made exactly Hermitian.
pub(crate) fn s_matrix(t1_sqrt: &CMat, r2: &CMat, phases: &PhaseShifts) -> CMat {
    let b = rotate_r2(r2, &phases.psi());
    linalg::hermitian_part(&(t1_sqrt * b * t1_sqrt))
}

/// Eigenvalues of R1, S and T2 at the given phases and effective SNR.
pub fn effective_spectra(corr: &CorrelationSet, phases: &PhaseShifts, rho_eff: f64) -> Result<EffectiveSpectra> {
    let dims = corr.dims()?;
    if phases.len() != dims.l {
        return Err(Error::invalid(format!(
            "phase vector has {} entries, IRS has {}",
            phases.len(),
            dims.l
        )));
    }
    let t1_sqrt = linalg::sqrt_psd(corr.t1(), "T1")?;
    let s = s_matrix(&t1_sqrt, corr.r2(), phases);
    let (r, _) = linalg::hermitian_eigen(corr.r1())?;
    let (s, _) = linalg::hermitian_eigen(&s)?;
    let (t, _) = linalg::hermitian_eigen(corr.t2())?;
    EffectiveSpectra::new(r, s, t, rho_eff)
}

/// Full statistical-CSI description of one link: correlations, phases and
/// the effective SNR with path loss folded in.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub corr: CorrelationSet,
    pub phases: PhaseShifts,
    pub rho: f64,
    dims: SystemDims,
}

impl Scenario {
    pub fn new(corr: CorrelationSet, phases: PhaseShifts, rho: f64) -> Result<Self> {
        let dims = corr.dims()?;
        if phases.len() != dims.l {
            return Err(Error::invalid(format!(
                "phase vector has {} entries, IRS has {}",
                phases.len(),
                dims.l
            )));
        }
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::invalid(format!("SNR must be finite and non-negative, got {rho}")));
        }
        Ok(Self { corr, phases, rho, dims })
    }

    pub fn dims(&self) -> SystemDims {
        self.dims
    }

    pub fn spectra(&self) -> Result<EffectiveSpectra> {
        effective_spectra(&self.corr, &self.phases, self.rho)
    }

    pub fn with_phases(&self, phases: PhaseShifts) -> Result<Self> {
        Self::new(self.corr.clone(), phases, self.rho)
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::new(self.corr.clone(), self.phases.clone(), rho)
    }
}
