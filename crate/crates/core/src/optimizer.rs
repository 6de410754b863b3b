//! Outage-minimizing IRS phase shifts from statistical CSI.
//!
//! The objective is `G(θ) = Φ((R − Ī(θ))/√V(θ))` with the Γ-variant
//! variance. Its gradient comes from the fixed-point sensitivities; the
//! descent is a normalized-gradient step with backtracking.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::channel::{rotate_r2, s_matrix, EffectiveSpectra, PhaseShifts, Scenario};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::normal::{norm_cdf, norm_pdf};
use crate::rmt::{
    solve_canonical, solve_canonical_warm, variance_derivative, ExplicitTerms, FixedPoint, SensitivitySystem,
    MiAnalysis, SolverConfig, VarianceVariant,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub alpha0: f64,
    /// Backtracking factor in (0, 1).
    pub c: f64,
    /// Sufficient-decrease control in (0, 1).
    pub beta: f64,
    pub max_outer: usize,
    pub max_backtrack: usize,
    pub grad_tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            alpha0: 5e-4,
            c: 0.5,
            beta: 0.5,
            max_outer: 500,
            max_backtrack: 60,
            grad_tol: 1e-12,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0) {
            return Err(Error::invalid(format!("alpha0 must be positive, got {}", self.alpha0)));
        }
        if !(self.c > 0.0 && self.c < 1.0) {
            return Err(Error::invalid(format!("backtracking factor must lie in (0, 1), got {}", self.c)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::invalid(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientReport {
    pub d_i: Vec<f64>,
    pub d_v: Vec<f64>,
    pub d_g: Vec<f64>,
    pub objective: f64,
    /// Objective with the small-L variance, for comparison only.
    pub objective_small_l: Option<f64>,
    pub mean_nats: f64,
    pub var_nats2: f64,
    #[serde(skip)]
    pub fixed_point: FixedPoint,
}

impl GradientReport {
    pub fn norm(&self) -> f64 {
        self.d_g.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// `F_l = T1^½ (G_l ∘ R2) T1^½`, the derivative of `S` with respect to θ_l.
/// `l` is zero-based.
pub fn perturbation_matrix(t1: &CMat, r2: &CMat, theta: &PhaseShifts, l: usize) -> Result<CMat> {
    let n = r2.nrows();
    if l >= n {
        return Err(Error::invalid(format!("element index {l} out of range for L = {n}")));
    }
    let th = theta.angles();
    let j = Complex64::new(0.0, 1.0);
    let g = CMat::from_fn(n, n, |p, q| {
        if p == l && q != l {
            j * Complex64::from_polar(1.0, th[l] - th[q])
        } else if q == l && p != l {
            -j * Complex64::from_polar(1.0, th[p] - th[l])
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let a = linalg::sqrt_psd(t1, "T1")?;
    let hadamard = g.component_mul(r2);
    Ok(&a * hadamard * &a)
}

/// Per-scenario data reused across gradient evaluations.
struct Prepared {
    t1_sqrt: CMat,
}

impl Prepared {
    fn new(scenario: &Scenario) -> Result<Self> {
        Ok(Self { t1_sqrt: linalg::sqrt_psd(scenario.corr.t1(), "T1")? })
    }
}

fn spectra_and_vectors(scenario: &Scenario, prep: &Prepared, phases: &PhaseShifts) -> Result<(EffectiveSpectra, CMat)> {
    let s = s_matrix(&prep.t1_sqrt, scenario.corr.r2(), phases);
    let (s_vals, u) = linalg::hermitian_eigen(&s)?;
    let (r, _) = linalg::hermitian_eigen(scenario.corr.r1())?;
    let (t, _) = linalg::hermitian_eigen(scenario.corr.t2())?;
    Ok((EffectiveSpectra::new(r, s_vals, t, scenario.rho)?, u))
}

fn analyse(spectra: &EffectiveSpectra, solver: &SolverConfig, warm: Option<&FixedPoint>) -> Result<MiAnalysis> {
    let fp = match warm {
        Some(w) => solve_canonical_warm(spectra, solver, w)?,
        None => solve_canonical(spectra, solver)?,
    };
    MiAnalysis::from_fixed_point(spectra, fp, VarianceVariant::LargeL)
}

fn objective_of(an: &MiAnalysis, rate_nats: f64) -> f64 {
    norm_cdf((rate_nats - an.mi.mean_nats) / an.mi.var_nats2.sqrt())
}

/// Outage objective `G(θ)` at the scenario's phases.
pub fn objective(scenario: &Scenario, rate_nats: f64, solver: &SolverConfig) -> Result<f64> {
    let an = analyse(&scenario.spectra()?, solver, None)?;
    Ok(objective_of(&an, rate_nats))
}

/// Analytic gradient of the objective at the scenario's phases.
pub fn gradient(scenario: &Scenario, rate_nats: f64, solver: &SolverConfig) -> Result<GradientReport> {
    let prep = Prepared::new(scenario)?;
    gradient_prepared(scenario, &prep, &scenario.phases, rate_nats, solver, None)
}

fn gradient_prepared(
    scenario: &Scenario,
    prep: &Prepared,
    phases: &PhaseShifts,
    rate_nats: f64,
    solver: &SolverConfig,
    warm: Option<&FixedPoint>,
) -> Result<GradientReport> {
    let (spectra, u) = spectra_and_vectors(scenario, prep, phases)?;
    let an = analyse(&spectra, solver, warm)?;
    let (fp, tq) = (&an.fixed_point, &an.traces);
    let dims = spectra.dims();
    let (l_count, m) = (dims.l, dims.m as f64);
    let (delta, gbar) = (fp.delta, fp.gbar);

    // diag_j(U^H F_l U) = −2 Im(conj(W_lj) (B W)_lj), W = T1^½ U
    let b = rotate_r2(scenario.corr.r2(), &phases.psi());
    let w = &prep.t1_sqrt * &u;
    let bw = &b * &w;
    let f_diag = DMatrix::<f64>::from_fn(l_count, l_count, |l, j| -2.0 * (w[(l, j)].conj() * bw[(l, j)]).im);

    let q: Vec<f64> = spectra.s.iter().map(|&s| 1.0 / (1.0 / delta + gbar * s)).collect();
    let sys = SensitivitySystem::new(&spectra, fp, tq);

    let (mean, var) = (an.mi.mean_nats, an.mi.var_nats2);
    let sd = var.sqrt();
    let t = (rate_nats - mean) / sd;
    let pdf_t = norm_pdf(t);

    let mut d_i = Vec::with_capacity(l_count);
    let mut d_v = Vec::with_capacity(l_count);
    let mut d_g = Vec::with_capacity(l_count);
    for l in 0..l_count {
        let (mut g_f, mut gamma_s_f, mut eta_s_f) = (0.0, 0.0, 0.0);
        for (j, (&s, &qj)) in spectra.s.iter().zip(&q).enumerate() {
            let f = f_diag[(l, j)];
            g_f += qj * f;
            gamma_s_f += s * qj * qj * f;
            eta_s_f += s * s * qj * qj * qj * f;
        }
        g_f /= m;
        gamma_s_f /= m;
        eta_s_f /= m;

        let p = sys.solve([0.0, g_f - gbar * gamma_s_f, 0.0])?;
        let di = gbar * m * g_f;
        let explicit = ExplicitTerms { gamma_r: 0.0, gamma_s: 2.0 * gamma_s_f - 2.0 * gbar * eta_s_f };
        let dv = variance_derivative(&spectra, fp, tq, p, explicit);
        let dt = (-di * var - 0.5 * (rate_nats - mean) * dv) / (var * sd);
        d_i.push(di);
        d_v.push(dv);
        d_g.push(pdf_t * dt);
    }

    let objective_small_l = an
        .variance_with(VarianceVariant::SmallL)
        .ok()
        .map(|v| norm_cdf((rate_nats - mean) / v.sqrt()));
    Ok(GradientReport {
        d_i,
        d_v,
        d_g,
        objective: norm_cdf(t),
        objective_small_l,
        mean_nats: mean,
        var_nats2: var,
        fixed_point: an.fixed_point,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Gradient norm fell below the tolerance.
    Stationary,
    MaxIterations,
    /// No step length passed the sufficient-decrease test.
    BacktrackExhausted,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeResult {
    pub theta: PhaseShifts,
    /// Objective at the start and after every accepted step.
    pub trajectory: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub iterations: usize,
    pub stop: StopReason,
}

/// Normalized-gradient descent with backtracking on the outage objective.
pub fn optimize(
    scenario: &Scenario,
    rate_nats: f64,
    theta0: &PhaseShifts,
    cfg: &OptimizerConfig,
    solver: &SolverConfig,
) -> Result<OptimizeResult> {
    cfg.validate()?;
    if theta0.len() != scenario.dims().l {
        return Err(Error::invalid("initial phase vector length does not match the IRS size"));
    }
    let prep = Prepared::new(scenario)?;
    let mut theta = theta0.clone();
    let mut report = gradient_prepared(scenario, &prep, &theta, rate_nats, solver, None)?;
    let mut trajectory = vec![report.objective];
    let mut grad_norms = Vec::new();
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;

    for _ in 0..cfg.max_outer {
        iterations += 1;
        let norm = report.norm();
        grad_norms.push(norm);
        if !(norm >= cfg.grad_tol) {
            stop = StopReason::Stationary;
            break;
        }
        let dir: Vec<f64> = report.d_g.iter().map(|x| x / norm).collect();
        let current = report.objective;
        let mut alpha = cfg.alpha0;
        let mut accepted = None;
        for _ in 0..=cfg.max_backtrack {
            let cand = PhaseShifts::new(theta.angles().iter().zip(&dir).map(|(t, d)| t - alpha * d).collect())?;
            let (sp, _) = spectra_and_vectors(scenario, &prep, &cand)?;
            let an = analyse(&sp, solver, Some(&report.fixed_point))?;
            let value = objective_of(&an, rate_nats);
            if current - value >= alpha * cfg.beta * norm {
                accepted = Some(cand);
                break;
            }
            alpha *= cfg.c;
        }
        let Some(cand) = accepted else {
            stop = StopReason::BacktrackExhausted;
            break;
        };
        theta = cand;
        report = gradient_prepared(scenario, &prep, &theta, rate_nats, solver, Some(&report.fixed_point))?;
        trajectory.push(report.objective);
    }
    Ok(OptimizeResult { theta, trajectory, grad_norms, iterations, stop })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{CorrelationSet, SystemDims};
    use crate::rmt::gaussian_mi;

    fn scenario(mu: f64, l: usize, rho: f64) -> Scenario {
        let dims = SystemDims::new(4, 4, l).unwrap();
        let corr = CorrelationSet::exponential(dims, mu, mu, mu, mu).unwrap();
        Scenario::new(corr, PhaseShifts::ramp(l), rho).unwrap()
    }

    fn rate_at_mean(sc: &Scenario) -> f64 {
        gaussian_mi(&sc.spectra().unwrap(), &SolverConfig::default(), VarianceVariant::LargeL)
            .unwrap()
            .mi
            .mean_nats
            * 0.9
    }

    #[test]
    fn perturbation_matrix_matches_finite_difference() {
        let sc = scenario(0.6, 5, 10.0);
        let theta = PhaseShifts::new(vec![0.3, 1.1, 2.0, 4.0, 5.5]).unwrap();
        let a = linalg::sqrt_psd(sc.corr.t1(), "T1").unwrap();
        let h = 1e-6;
        for l in 0..5 {
            let f = perturbation_matrix(sc.corr.t1(), sc.corr.r2(), &theta, l).unwrap();
            assert!(linalg::hermitian_defect(&f) < 1e-12);
            let mut up = theta.angles().to_vec();
            let mut dn = up.clone();
            up[l] += h;
            dn[l] -= h;
            let su = s_matrix(&a, sc.corr.r2(), &PhaseShifts::new(up).unwrap());
            let sd = s_matrix(&a, sc.corr.r2(), &PhaseShifts::new(dn).unwrap());
            let fd = (su - sd) / Complex64::new(2.0 * h, 0.0);
            assert!((fd - &f).camax() < 1e-6);
        }
    }

    #[test]
    fn perturbation_vanishes_for_identity_r2() {
        let dims = SystemDims::new(2, 2, 4).unwrap();
        let corr = CorrelationSet::exponential(dims, 0.0, 0.5, 0.0, 0.0).unwrap();
        let f = perturbation_matrix(corr.t1(), corr.r2(), &PhaseShifts::ramp(4), 2).unwrap();
        assert!(f.camax() == 0.0);
    }

    #[test]
    fn fast_diagonal_matches_explicit_route() {
        let sc = scenario(0.7, 6, 20.0);
        let prep = Prepared::new(&sc).unwrap();
        let (_, u) = spectra_and_vectors(&sc, &prep, &sc.phases).unwrap();
        let b = rotate_r2(sc.corr.r2(), &sc.phases.psi());
        let w = &prep.t1_sqrt * &u;
        let bw = &b * &w;
        for l in 0..6 {
            let f = perturbation_matrix(sc.corr.t1(), sc.corr.r2(), &sc.phases, l).unwrap();
            let rot = u.adjoint() * f * &u;
            for j in 0..6 {
                let fast = -2.0 * (w[(l, j)].conj() * bw[(l, j)]).im;
                assert!((rot[(j, j)].re - fast).abs() < 1e-12);
                assert!(rot[(j, j)].im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_correlations_give_zero_gradient() {
        let dims = SystemDims::new(3, 3, 6).unwrap();
        let sc = Scenario::new(CorrelationSet::identity(dims), PhaseShifts::ramp(6), 10.0).unwrap();
        let r = rate_at_mean(&sc);
        let rep = gradient(&sc, r, &SolverConfig::default()).unwrap();
        assert!(rep.norm() < 1e-14, "{:?}", rep.d_g);
        let res = optimize(&sc, r, &sc.phases, &OptimizerConfig::default(), &SolverConfig::default()).unwrap();
        assert_eq!(res.stop, StopReason::Stationary);
        assert_eq!(res.iterations, 1);
        assert_eq!(res.theta, sc.phases);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let sc = scenario(0.8, 6, 30.0);
        let solver = SolverConfig { eps: 1e-14, ..Default::default() };
        let r = rate_at_mean(&sc);
        let rep = gradient(&sc, r, &solver).unwrap();
        let h = 1e-6;
        for l in 0..6 {
            let mut up = sc.phases.angles().to_vec();
            let mut dn = up.clone();
            up[l] += h;
            dn[l] -= h;
            let gu = objective(&sc.with_phases(PhaseShifts::new(up).unwrap()).unwrap(), r, &solver).unwrap();
            let gd = objective(&sc.with_phases(PhaseShifts::new(dn).unwrap()).unwrap(), r, &solver).unwrap();
            let fd = (gu - gd) / (2.0 * h);
            assert!((fd - rep.d_g[l]).abs() <= 1e-4 * fd.abs(), "{l}: {} vs {fd}", rep.d_g[l]);
        }
        let sum: f64 = rep.d_g.iter().sum();
        assert!(sum.abs() < 1e-10);
    }

    #[test]
    fn descent_is_monotone() {
        let sc = scenario(0.8, 8, 30.0);
        let r = rate_at_mean(&sc);
        let cfg = OptimizerConfig { max_outer: 40, alpha0: 0.05, ..Default::default() };
        let res = optimize(&sc, r, &sc.phases, &cfg, &SolverConfig::default()).unwrap();
        assert!(res.trajectory.windows(2).all(|w| w[1] <= w[0]));
        assert!(res.trajectory.last().unwrap() < &res.trajectory[0]);
    }

    #[test]
    fn bad_config_rejected() {
        let cfg = OptimizerConfig { c: 1.5, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
