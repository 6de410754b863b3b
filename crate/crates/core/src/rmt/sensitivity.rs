//! First-order sensitivities of the fixed point and of the variance.
//!
//! Differentiating the canonical system along any scalar parameter gives the
//! 3×3 system `A [δ', g', ḡ']ᵀ = q`. Only the right-hand side depends on the
//! parameter (z for the DMT, a phase θ_l for the optimizer).

use nalgebra::{Matrix3, Vector3};

use crate::channel::EffectiveSpectra;
use crate::error::{Error, Result};
use crate::rmt::canonical::FixedPoint;
use crate::rmt::quantities::TraceQuantities;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivitySystem {
    pub a: Matrix3<f64>,
    z: f64,
    m: f64,
    l: f64,
    delta: f64,
    tq: TraceQuantities,
}

/// `[δ', g', ḡ']`.
pub type Sensitivities = [f64; 3];

impl SensitivitySystem {
    pub fn new(spectra: &EffectiveSpectra, fp: &FixedPoint, tq: &TraceQuantities) -> Self {
        let dims = spectra.dims();
        let (m, l) = (dims.m as f64, dims.l as f64);
        let z = 1.0 / spectra.rho;
        let (delta, g, gbar) = (fp.delta, fp.g, fp.gbar);
        #[rustfmt::skip]
        let a = Matrix3::new(
            z * tq.gamma_ri, m * gbar * tq.gamma_r / l, m * g * tq.gamma_r / l,
            -tq.gamma_si / (delta * delta), 1.0, tq.gamma_s,
            0.0, tq.gamma_t, 1.0,
        );
        Self { a, z, m, l, delta, tq: *tq }
    }

    /// Closed-form determinant `zγ_{R,I}Δ_Y + Mγ_Rγ_{S,I}γ_{T,I}/(Lδ²)`.
    pub fn det_closed_form(&self) -> f64 {
        let t = &self.tq;
        self.z * t.gamma_ri * t.delta_y + self.m * t.gamma_r * t.gamma_si * t.gamma_ti / (self.l * self.delta * self.delta)
    }

    pub fn det_direct(&self) -> f64 {
        self.a.determinant()
    }

    pub fn solve(&self, rhs: [f64; 3]) -> Result<Sensitivities> {
        let det = self.det_closed_form();
        if !(det > 0.0) {
            return Err(Error::regime(format!("sensitivity system determinant {det:e} is not positive")));
        }
        let x = self
            .a
            .lu()
            .solve(&Vector3::from(rhs))
            .ok_or_else(|| Error::regime("sensitivity system is singular"))?;
        Ok([x[0], x[1], x[2]])
    }
}

/// Explicit (non fixed-point) parts of the derivatives of γ_R and γ_S.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExplicitTerms {
    pub gamma_r: f64,
    pub gamma_s: f64,
}

/// Derivative of the Γ-variant variance given the fixed-point sensitivities.
pub fn variance_derivative(
    spectra: &EffectiveSpectra,
    fp: &FixedPoint,
    tq: &TraceQuantities,
    p: Sensitivities,
    explicit: ExplicitTerms,
) -> f64 {
    let dims = spectra.dims();
    let (m, l) = (dims.m as f64, dims.l as f64);
    let (delta, g, gbar) = (fp.delta, fp.g, fp.gbar);
    let [dd, dg, dgb] = p;
    let t = tq;

    let d_gamma_t = -2.0 * dg * t.eta_t;
    let d_gamma_ti = -2.0 * dg * t.eta_ti;
    let d_gamma_s = -2.0 * dgb * t.eta_s + 2.0 * dd * t.eta_si / (delta * delta) + explicit.gamma_s;
    let d_gamma_r =
        -2.0 * m * t.eta_r * (delta * dg * gbar + delta * g * dgb - g * gbar * dd) / (l * delta * delta) + explicit.gamma_r;

    let dy = t.delta_y;
    let pref = m / (l * delta * delta);
    let d_big_gamma = pref
        * (2.0 * t.gamma_ti * d_gamma_ti * t.gamma_s / dy
            + t.gamma_ti * t.gamma_ti * (d_gamma_s + t.gamma_s * t.gamma_s * d_gamma_t) / (dy * dy)
            + 2.0 * g * dg * t.gamma_t
            + g * g * d_gamma_t)
        - 2.0 * m * dd / (l * delta.powi(3)) * (t.gamma_s * t.gamma_ti * t.gamma_ti / dy + g * g * t.gamma_t);

    (t.gamma_s * d_gamma_t + d_gamma_s * t.gamma_t) / dy + (t.gamma_r * d_big_gamma + d_gamma_r * t.big_gamma) / t.delta_x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rmt::{solve_canonical, trace_quantities, SolverConfig};

    #[test]
    fn determinant_two_ways() {
        let sp = EffectiveSpectra::new(vec![1.4, 0.7, 0.3], vec![2.5, 1.0, 0.4, 0.1], vec![1.1, 0.9], 9.0).unwrap();
        let fp = solve_canonical(&sp, &SolverConfig::default()).unwrap();
        let tq = trace_quantities(&sp, &fp).unwrap();
        let sys = SensitivitySystem::new(&sp, &fp, &tq);
        let (a, b) = (sys.det_closed_form(), sys.det_direct());
        assert!(a > 0.0);
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} {b}");
    }

    #[test]
    fn zero_rhs_zero_solution() {
        let sp = EffectiveSpectra::new(vec![1.0, 0.5], vec![1.0, 0.5, 0.2], vec![1.0, 1.0], 4.0).unwrap();
        let fp = solve_canonical(&sp, &SolverConfig::default()).unwrap();
        let tq = trace_quantities(&sp, &fp).unwrap();
        let p = SensitivitySystem::new(&sp, &fp, &tq).solve([0.0; 3]).unwrap();
        assert_eq!(p, [0.0; 3]);
    }

    #[test]
    fn z_sensitivities_match_finite_difference() {
        let sp = EffectiveSpectra::new(vec![1.4, 0.7, 0.3], vec![2.5, 1.0, 0.4, 0.1], vec![1.1, 0.9, 0.4], 9.0).unwrap();
        let cfg = SolverConfig { eps: 1e-14, ..Default::default() };
        let fp = solve_canonical(&sp, &cfg).unwrap();
        let tq = trace_quantities(&sp, &fp).unwrap();
        let p = SensitivitySystem::new(&sp, &fp, &tq).solve([-fp.delta * tq.gamma_ri, 0.0, 0.0]).unwrap();
        let z = 1.0 / sp.rho;
        let h = 1e-6 * z;
        let up = solve_canonical(&sp.with_rho(1.0 / (z + h)).unwrap(), &cfg).unwrap();
        let dn = solve_canonical(&sp.with_rho(1.0 / (z - h)).unwrap(), &cfg).unwrap();
        let fd = [
            (up.delta - dn.delta) / (2.0 * h),
            (up.g - dn.g) / (2.0 * h),
            (up.gbar - dn.gbar) / (2.0 * h),
        ];
        for i in 0..3 {
            assert!((p[i] - fd[i]).abs() <= 1e-5 * fd[i].abs().max(1e-8), "{i}: {} vs {}", p[i], fd[i]);
        }
    }
}
