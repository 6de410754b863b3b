//! Python bindings for the outage, DMT, sizing and phase-optimization toolkit.

use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use irs_outage::monte_carlo::{estimate, SamplerSpec};
use irs_outage::optimizer::{gradient, optimize, OptimizerConfig};
use irs_outage::outage::{finite_snr_dmt, min_irs_size, outage as outage_of, outage_rate};
use irs_outage::rmt::{
    asymptotic_limit, gaussian_mi, high_snr_approx, iid_emi, iid_g, iid_variance, solve_canonical, HighSnrRegime,
    SolverConfig, VarianceVariant,
};
use irs_outage::{CorrelationSet, Error, PhaseShifts, SystemDims};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_) | Error::Config(_) => PyValueError::new_err(e.to_string()),
        Error::NumericalRegime(_) => PyArithmeticError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn variant(name: &str) -> PyResult<VarianceVariant> {
    match name {
        "small_l" => Ok(VarianceVariant::SmallL),
        "large_l" => Ok(VarianceVariant::LargeL),
        _ => Err(PyValueError::new_err(format!("variant must be 'small_l' or 'large_l', got {name:?}"))),
    }
}

/// A correlated two-hop IRS link at one SNR.
#[pyclass(name = "Scenario", frozen)]
struct PyScenario {
    inner: irs_outage::Scenario,
}

#[pymethods]
impl PyScenario {
    #[new]
    #[pyo3(signature = (m, n, l, rho, mu_r1=0.0, mu_t1=0.0, mu_r2=0.0, mu_t2=0.0, phases=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        m: usize,
        n: usize,
        l: usize,
        rho: f64,
        mu_r1: f64,
        mu_t1: f64,
        mu_r2: f64,
        mu_t2: f64,
        phases: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let dims = SystemDims::new(m, n, l).map_err(to_py)?;
        let corr = CorrelationSet::exponential(dims, mu_r1, mu_t1, mu_r2, mu_t2).map_err(to_py)?;
        let phases = match phases {
            Some(p) => PhaseShifts::new(p).map_err(to_py)?,
            None => PhaseShifts::zeros(l),
        };
        let inner = irs_outage::Scenario::new(corr, phases, rho).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dims(&self) -> (usize, usize, usize) {
        let d = self.inner.dims();
        (d.m, d.n, d.l)
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.inner.rho
    }

    #[getter]
    fn phases(&self) -> Vec<f64> {
        self.inner.phases.angles().to_vec()
    }

    fn with_phases(&self, phases: Vec<f64>) -> PyResult<Self> {
        let p = PhaseShifts::new(phases).map_err(to_py)?;
        Ok(Self { inner: self.inner.with_phases(p).map_err(to_py)? })
    }

    fn with_rho(&self, rho: f64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.with_rho(rho).map_err(to_py)? })
    }

    /// Eigenvalues (r, s, t) of the equivalent channel.
    fn spectra(&self) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let sp = self.inner.spectra().map_err(to_py)?;
        Ok((sp.r, sp.s, sp.t))
    }

    /// Solution (delta, g, gbar) of the canonical system.
    fn fixed_point(&self) -> PyResult<(f64, f64, f64)> {
        let sp = self.inner.spectra().map_err(to_py)?;
        let fp = solve_canonical(&sp, &SolverConfig::default()).map_err(to_py)?;
        Ok((fp.delta, fp.g, fp.gbar))
    }

    /// Mean (nats) and variance (nats²) of the mutual information.
    #[pyo3(signature = (variant="small_l"))]
    fn mean_variance(&self, variant: &str) -> PyResult<(f64, f64)> {
        let sp = self.inner.spectra().map_err(to_py)?;
        let an = gaussian_mi(&sp, &SolverConfig::default(), self::variant(variant)?).map_err(to_py)?;
        Ok((an.mi.mean_nats, an.mi.var_nats2))
    }

    /// Outage probability and its natural log at a rate in nats.
    #[pyo3(signature = (rate_nats, variant="small_l"))]
    fn outage(&self, rate_nats: f64, variant: &str) -> PyResult<(f64, f64)> {
        let (mean, var) = self.mean_variance(variant)?;
        let o = outage_of(mean, var, rate_nats).map_err(to_py)?;
        Ok((o.p_out, o.log_p_out))
    }

    /// Gradient of the outage objective with respect to the phases.
    fn gradient(&self, rate_nats: f64) -> PyResult<Vec<f64>> {
        Ok(gradient(&self.inner, rate_nats, &SolverConfig::default()).map_err(to_py)?.d_g)
    }

    /// Runs phase optimization from the current phases; returns (theta, trajectory).
    #[pyo3(signature = (rate_nats, max_outer=500, alpha0=5e-4, beta=0.5))]
    fn optimize(&self, rate_nats: f64, max_outer: usize, alpha0: f64, beta: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let cfg = OptimizerConfig { max_outer, alpha0, beta, ..OptimizerConfig::default() };
        let res = optimize(&self.inner, rate_nats, &self.inner.phases, &cfg, &SolverConfig::default()).map_err(to_py)?;
        Ok((res.theta.angles().to_vec(), res.trajectory))
    }

    /// Finite-SNR diversity at multiplexing gain m.
    fn dmt(&self, m: f64) -> PyResult<f64> {
        let sp = self.inner.spectra().map_err(to_py)?;
        Ok(finite_snr_dmt(m, &sp, &SolverConfig::default()).map_err(to_py)?.d)
    }

    /// Monte-Carlo summary: mean, variance, ks_distance and per-threshold outage.
    #[pyo3(signature = (seed, samples, thresholds_nats=Vec::new(), streams=16))]
    fn monte_carlo<'py>(
        &self,
        py: Python<'py>,
        seed: u64,
        samples: usize,
        thresholds_nats: Vec<f64>,
        streams: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let spec = SamplerSpec::new(seed, samples, streams).map_err(to_py)?;
        let st = py.detach(|| estimate(&self.inner, &spec, &thresholds_nats)).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("n", st.n)?;
        d.set_item("mean", st.mean)?;
        d.set_item("variance", st.variance)?;
        d.set_item("mean_ci", st.mean_ci)?;
        d.set_item("ks_distance", st.ks_distance)?;
        let outage: Vec<(f64, f64, f64, f64)> =
            st.outage.iter().map(|o| (o.threshold_nats, o.p_hat, o.ci_low, o.ci_high)).collect();
        d.set_item("outage", outage)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        let d = self.inner.dims();
        format!("Scenario(m={}, n={}, l={}, rho={})", d.m, d.n, d.l, self.inner.rho)
    }
}

/// Mean mutual information (nats) for i.i.d. channels with M = N = n and tau = n / L.
#[pyfunction(name = "iid_emi")]
fn py_iid_emi(n: usize, tau: f64, rho: f64) -> PyResult<f64> {
    iid_emi(n, tau, rho).map_err(to_py)
}

/// Variance (nats²) for i.i.d. channels.
#[pyfunction(name = "iid_variance")]
fn py_iid_variance(tau: f64, rho: f64) -> PyResult<f64> {
    Ok(iid_variance(rho, iid_g(tau, rho).map_err(to_py)?))
}

/// Infinite-IRS (delta, mean, variance).
#[pyfunction(name = "asymptotic_limit")]
fn py_asymptotic_limit(n: usize, rho: f64) -> PyResult<(f64, f64, f64)> {
    let a = asymptotic_limit(n, rho).map_err(to_py)?;
    Ok((a.delta, a.mean_nats, a.var_nats2))
}

/// High-SNR (mean, variance); regime is 'small_l' or 'large_l'.
#[pyfunction(name = "high_snr_approx")]
fn py_high_snr_approx(n: usize, l: usize, rho: f64, regime: &str) -> PyResult<(f64, f64)> {
    let r = match regime {
        "small_l" => HighSnrRegime::SmallL,
        "large_l" => HighSnrRegime::LargeL,
        _ => return Err(PyValueError::new_err(format!("regime must be 'small_l' or 'large_l', got {regime:?}"))),
    };
    high_snr_approx(n, l, rho, r).map_err(to_py)
}

/// Smallest IRS reaching efficiency eta, or None.
#[pyfunction(name = "min_irs_size")]
fn py_min_irs_size(eta: f64, n: usize, rho: f64) -> PyResult<Option<usize>> {
    Ok(min_irs_size(eta, n, rho).map_err(to_py)?.l_min)
}

#[pyfunction(name = "outage_probability")]
fn py_outage_probability(mean_nats: f64, var_nats2: f64, rate_nats: f64) -> PyResult<f64> {
    Ok(outage_of(mean_nats, var_nats2, rate_nats).map_err(to_py)?.p_out)
}

#[pyfunction(name = "outage_rate")]
fn py_outage_rate(mean_nats: f64, var_nats2: f64, p_out: f64) -> PyResult<f64> {
    outage_rate(mean_nats, var_nats2, p_out).map_err(to_py)
}

#[pymodule]
fn irs_outage_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(py_iid_emi, m)?)?;
    m.add_function(wrap_pyfunction!(py_iid_variance, m)?)?;
    m.add_function(wrap_pyfunction!(py_asymptotic_limit, m)?)?;
    m.add_function(wrap_pyfunction!(py_high_snr_approx, m)?)?;
    m.add_function(wrap_pyfunction!(py_min_irs_size, m)?)?;
    m.add_function(wrap_pyfunction!(py_outage_probability, m)?)?;
    m.add_function(wrap_pyfunction!(py_outage_rate, m)?)?;
    Ok(())
}
