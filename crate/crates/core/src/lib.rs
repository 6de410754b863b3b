//! Random-matrix deterministic equivalents for IRS-aided MIMO links: mean and
//! variance of the mutual information, outage probability, finite-SNR
//! diversity-multiplexing tradeoff, IRS sizing, outage-driven phase-shift
//! optimization and a Monte-Carlo oracle for all of them.

pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod linalg;
pub mod monte_carlo;
pub mod normal;
pub mod optimizer;
pub mod outage;
pub mod rmt;

pub use channel::{
    effective_spectra, exponential_correlation, path_loss, CorrelationSet, EffectiveSpectra, LinkBudget,
    PhaseShifts, Scenario, SystemDims,
};
pub use error::{Error, Result};
pub use rmt::{FixedPoint, GaussianMi, SolverConfig, TraceQuantities, VarianceVariant};
