//! Deterministic equivalents of the mutual-information distribution.

pub mod canonical;
pub mod iid;
pub mod quantities;
pub mod sensitivity;

pub use canonical::{canonical_residual, solution_bounds, solve_canonical, solve_canonical_warm, FixedPoint, SolverConfig};
pub use iid::{asymptotic_limit, cardano_roots, high_snr_approx, iid_emi, iid_g, iid_g_bisection, iid_variance, AsymptoticLimit, HighSnrRegime};
pub use quantities::{emi, gaussian_mi, trace_quantities, variance, GaussianMi, MiAnalysis, TraceQuantities, VarianceVariant};
pub use sensitivity::{variance_derivative, ExplicitTerms, SensitivitySystem, Sensitivities};
