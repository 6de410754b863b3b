//! Nested fixed-point solver for the canonical system
//!
//! ```text
//! δ = (1/L) Tr R (z I + M g ḡ/(L δ) R)^{-1}
//! g = (1/M) Tr S (δ^{-1} I + ḡ S)^{-1}
//! ḡ = (1/M) Tr T (I + g T)^{-1}
//! ```
//!
//! with `z = 1/ρ`. All traces are scalar sums over the effective spectra.
//! The outer loop iterates the δ-map starting from its upper bound
//! `δ_U = N r_max / (L z)`; for every δ the inner loop alternates g and ḡ
//! starting from `ḡ_U = t_max`. Both loops are monotone contractions, so the
//! recorded δ iterates decrease towards the solution.

use crate::channel::EffectiveSpectra;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Target for the scaled residual `|x - f(x)| / max(1, |x|)` of each equation.
    pub eps: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps: 1e-12,
            max_outer: 1000,
            max_inner: 1000,
        }
    }
}

/// Positive solution `(δ, g, ḡ)` of the canonical system.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub delta: f64,
    pub g: f64,
    pub gbar: f64,
    /// Largest scaled defect of the three equations at the returned point.
    pub residual: f64,
    pub iterations_outer: usize,
    /// Total inner iterations summed over all outer steps.
    pub iterations_inner: usize,
    /// Outer δ iterates, starting point first.
    pub delta_trace: Vec<f64>,
}

fn scaled(defect: f64, value: f64) -> f64 {
    defect.abs() / value.abs().max(1.0)
}

/// Right-hand sides of the three equations, evaluated at `(δ, g, ḡ)`.
pub fn canonical_maps(spectra: &EffectiveSpectra, delta: f64, g: f64, gbar: f64) -> (f64, f64, f64) {
    let dims = spectra.dims();
    let (m, l) = (dims.m as f64, dims.l as f64);
    let z = 1.0 / spectra.rho;
    let c = m * g * gbar / (l * delta);
    let h = spectra.r.iter().map(|&r| r / (z + c * r)).sum::<f64>() / l;
    let inv_delta = 1.0 / delta;
    let g_map = spectra.s.iter().map(|&s| s / (inv_delta + gbar * s)).sum::<f64>() / m;
    let gbar_map = spectra.t.iter().map(|&t| t / (1.0 + g * t)).sum::<f64>() / m;
    (h, g_map, gbar_map)
}

/// Largest scaled defect of the canonical equations.
pub fn canonical_residual(spectra: &EffectiveSpectra, delta: f64, g: f64, gbar: f64) -> f64 {
    let (h, gm, gbm) = canonical_maps(spectra, delta, g, gbar);
    scaled(delta - h, delta).max(scaled(g - gm, g)).max(scaled(gbar - gbm, gbar))
}

/// Closed interval bounds on the solution: `(δ_L, δ_U)` and `ḡ_U`.
pub fn solution_bounds(spectra: &EffectiveSpectra) -> (f64, f64, f64) {
    let dims = spectra.dims();
    let (n, l) = (dims.n as f64, dims.l as f64);
    let z = 1.0 / spectra.rho;
    let r_max = spectra.r[0];
    let s_max = spectra.s[0];
    let t_max = spectra.t[0];
    let tr_r: f64 = spectra.r.iter().sum();
    let delta_lo = tr_r / (l * (z + s_max * t_max * r_max));
    let delta_hi = n * r_max / (l * z);
    (delta_lo, delta_hi, t_max)
}

fn check_preconditions(spectra: &EffectiveSpectra) -> Result<()> {
    if !(spectra.rho > 0.0) {
        return Err(Error::invalid("canonical system needs rho > 0"));
    }
    for (name, v) in [("R", &spectra.r), ("S", &spectra.s), ("T", &spectra.t)] {
        if !(v.iter().sum::<f64>() > 0.0) {
            return Err(Error::invalid(format!(
                "spectrum of {name} has zero trace; the canonical system has no positive solution"
            )));
        }
    }
    Ok(())
}

struct Inner {
    g: f64,
    gbar: f64,
    iterations: usize,
}

fn solve_inner(spectra: &EffectiveSpectra, delta: f64, gbar0: f64, cfg: &SolverConfig, tol: f64) -> Result<Inner> {
    let m = spectra.t.len() as f64;
    let inv_delta = 1.0 / delta;
    let g_of = |gbar: f64| spectra.s.iter().map(|&s| s / (inv_delta + gbar * s)).sum::<f64>() / m;
    let gbar_of = |g: f64| spectra.t.iter().map(|&t| t / (1.0 + g * t)).sum::<f64>() / m;

    // phi = gbar_of . g_of is increasing with slope below one, so each plain
    // step lands between the iterate and the root; Aitken steps are kept
    // inside that bracket
    let phi = |gbar: f64| -> Result<f64> {
        let g = g_of(gbar);
        let next = gbar_of(g);
        if !(next > 0.0) || !(g > 0.0) {
            return Err(Error::regime(format!(
                "inner fixed-point iterate left the positive orthant (g = {g:e}, gbar = {next:e})"
            )));
        }
        Ok(next)
    };
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut gbar = gbar0;
    for it in 1..=cfg.max_inner {
        let p1 = phi(gbar)?;
        let step = p1 - gbar;
        if scaled(step, p1) <= tol {
            return Ok(Inner {
                g: g_of(p1),
                gbar: p1,
                iterations: it,
            });
        }
        if step > 0.0 {
            lo = lo.max(p1);
        } else {
            hi = hi.min(p1);
        }
        let p2 = phi(p1)?;
        let cand = gbar - step * step / (p2 - 2.0 * p1 + gbar);
        gbar = if cand.is_finite() && cand > lo && cand < hi { cand } else { p2 };
    }
    let g = g_of(gbar);
    Err(Error::NonConvergence {
        what: "inner (g, gbar) iteration",
        iterations: cfg.max_inner,
        residual: scaled(gbar - gbar_of(g), gbar),
    })
}

/// Solves the canonical system from the upper-bound starting point.
pub fn solve_canonical(spectra: &EffectiveSpectra, cfg: &SolverConfig) -> Result<FixedPoint> {
    check_preconditions(spectra)?;
    let (_, delta_hi, t_max) = solution_bounds(spectra);
    run(spectra, cfg, delta_hi, t_max)
}

/// Solves the canonical system starting from a previous solution (e.g. the
/// previous optimizer iterate). Falls back to the cold start when the warm
/// start does not converge.
pub fn solve_canonical_warm(spectra: &EffectiveSpectra, cfg: &SolverConfig, warm: &FixedPoint) -> Result<FixedPoint> {
    check_preconditions(spectra)?;
    let valid = warm.delta > 0.0 && warm.gbar > 0.0 && warm.delta.is_finite() && warm.gbar.is_finite();
    if valid {
        if let Ok(fp) = run(spectra, cfg, warm.delta, warm.gbar) {
            return Ok(fp);
        }
    }
    solve_canonical(spectra, cfg)
}

fn run(spectra: &EffectiveSpectra, cfg: &SolverConfig, delta0: f64, gbar0: f64) -> Result<FixedPoint> {
    let dims = spectra.dims();
    let (m, l) = (dims.m as f64, dims.l as f64);
    let z = 1.0 / spectra.rho;
    // the outer step only sees an approximate inner solution; keep that error
    // well below the outer tolerance
    let inner_tol = (cfg.eps * 1e-2).max(1e-15);
    let outer_tol = cfg.eps * 0.5;

    let h_of = |delta: f64, g: f64, gbar: f64| {
        let c = m * g * gbar / (l * delta);
        spectra.r.iter().map(|&r| r / (z + c * r)).sum::<f64>() / l
    };

    let mut delta = delta0;
    let mut trace = vec![delta];
    let mut inner_total = 0usize;
    let mut inner = solve_inner(spectra, delta, gbar0, cfg, inner_tol)?;
    inner_total += inner.iterations;

    let (delta_lo, _, _) = solution_bounds(spectra);
    // last two plain iterates, for extrapolation
    let mut history: Vec<f64> = vec![delta];
    for outer in 1..=cfg.max_outer {
        let next = h_of(delta, inner.g, inner.gbar);
        if !(next > 0.0) || !next.is_finite() {
            return Err(Error::regime(format!("outer delta iterate not positive ({next:e})")));
        }
        let step = next - delta;
        delta = next;
        trace.push(delta);
        // Algorithm restarts the inner loop from its upper bound, which keeps
        // the inner iterates monotone; starting from the previous gbar is
        // equivalent in the limit and much cheaper.
        inner = solve_inner(spectra, delta, inner.gbar.max(f64::MIN_POSITIVE), cfg, inner_tol)?;
        inner_total += inner.iterations;
        if scaled(step, delta) <= outer_tol {
            let residual = canonical_residual(spectra, delta, inner.g, inner.gbar);
            if residual <= cfg.eps {
                return Ok(FixedPoint {
                    delta,
                    g: inner.g,
                    gbar: inner.gbar,
                    residual,
                    iterations_outer: outer,
                    iterations_inner: inner_total,
                    delta_trace: trace,
                });
            }
        }
        history.push(delta);
        if history.len() == 3 {
            let (x0, x1, x2) = (history[0], history[1], history[2]);
            let denom = (x2 - x1) - (x1 - x0);
            let cand = x2 - (x2 - x1) * (x2 - x1) / denom;
            history.clear();
            history.push(x2);
            // an extrapolated point is kept only if it stays above the root,
            // which preserves the decreasing iterate sequence
            if cand.is_finite() && cand < x2 && cand > delta_lo {
                if let Ok(trial) = solve_inner(spectra, cand, inner.gbar, cfg, inner_tol) {
                    inner_total += trial.iterations;
                    if h_of(cand, trial.g, trial.gbar) <= cand {
                        delta = cand;
                        inner = trial;
                        trace.push(delta);
                        history.clear();
                        history.push(delta);
                    }
                }
            }
        }
    }
    Err(Error::NonConvergence {
        what: "canonical fixed point",
        iterations: cfg.max_outer,
        residual: canonical_residual(spectra, delta, inner.g, inner.gbar),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::SystemDims;

    /// Plain bisection on g(1+g)^2 = ρ (the τ = 1 cubic), independent of the solver.
    fn bisect_tau_one(rho: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, rho.max(1.0));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * (1.0 + mid) * (1.0 + mid) < rho {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn identity_square_matches_cubic() {
        let dims = SystemDims::new(4, 4, 4).unwrap();
        let sp = EffectiveSpectra::identity(dims, 1.0).unwrap();
        let fp = solve_canonical(&sp, &SolverConfig::default()).unwrap();
        let g_ref = bisect_tau_one(1.0);
        assert!((g_ref - 0.46557).abs() < 1e-5);
        assert!((fp.g - g_ref).abs() < 1e-10, "{} vs {}", fp.g, g_ref);
        assert!(fp.residual <= 1e-12);
    }

    #[test]
    fn identity_reduced_relations() {
        for (m, l, rho) in [(4usize, 8usize, 3.0f64), (6, 3, 0.5), (5, 20, 40.0)] {
            let dims = SystemDims::new(m, m, l).unwrap();
            let sp = EffectiveSpectra::identity(dims, rho).unwrap();
            let fp = solve_canonical(&sp, &SolverConfig::default()).unwrap();
            let tau = m as f64 / l as f64;
            assert!((fp.gbar - 1.0 / (1.0 + fp.g)).abs() < 1e-11);
            assert!((fp.delta - tau * fp.gbar * rho).abs() < 1e-10 * fp.delta.max(1.0));
        }
    }

    #[test]
    fn scaled_r_spectrum_solves() {
        let sp = EffectiveSpectra::new(vec![2.0; 4], vec![1.0; 6], vec![1.0; 3], 5.0).unwrap();
        let fp = solve_canonical(&sp, &SolverConfig::default()).unwrap();
        assert!(canonical_residual(&sp, fp.delta, fp.g, fp.gbar) < 1e-12);
    }

    #[test]
    fn delta_trace_monotone_and_bounds_hold() {
        let sp = EffectiveSpectra::new(
            vec![1.7, 1.1, 0.8, 0.4],
            vec![3.1, 2.0, 1.2, 0.9, 0.5, 0.2, 0.1, 0.0],
            vec![1.5, 1.0, 0.5],
            12.0,
        )
        .unwrap();
        let fp = solve_canonical(&sp, &SolverConfig::default()).unwrap();
        assert!(fp.delta_trace.windows(2).all(|w| w[1] <= w[0]), "{:?}", fp.delta_trace);
        let (lo, hi, gbar_hi) = solution_bounds(&sp);
        assert!(fp.delta >= lo && fp.delta <= hi);
        assert!(fp.gbar <= gbar_hi);
        assert!(fp.delta > 0.0 && fp.g > 0.0 && fp.gbar > 0.0);
    }

    #[test]
    fn warm_start_agrees() {
        let sp = EffectiveSpectra::new(vec![1.2, 0.8], vec![2.0, 1.0, 0.5], vec![1.0, 0.7], 8.0).unwrap();
        let cfg = SolverConfig::default();
        let cold = solve_canonical(&sp, &cfg).unwrap();
        let sp2 = sp.with_rho(8.5).unwrap();
        let warm = solve_canonical_warm(&sp2, &cfg, &cold).unwrap();
        let cold2 = solve_canonical(&sp2, &cfg).unwrap();
        assert!((warm.delta - cold2.delta).abs() < 1e-10 * cold2.delta);
        assert!((warm.g - cold2.g).abs() < 1e-10 * cold2.g);
    }

    #[test]
    fn zero_trace_rejected() {
        let sp = EffectiveSpectra::new(vec![1.0], vec![0.0, 0.0], vec![1.0], 1.0).unwrap();
        assert!(matches!(solve_canonical(&sp, &SolverConfig::default()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn cap_reports_non_convergence() {
        let sp = EffectiveSpectra::identity(SystemDims::new(4, 4, 4).unwrap(), 100.0).unwrap();
        let cfg = SolverConfig { eps: 1e-12, max_outer: 2, max_inner: 1000 };
        assert!(matches!(solve_canonical(&sp, &cfg), Err(Error::NonConvergence { .. })));
    }
}
