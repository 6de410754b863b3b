//! JSON run configuration for the command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;

use crate::channel::{db_to_linear, CorrelationSet, LinkBudget, PhaseShifts, Scenario, SystemDims};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::optimizer::OptimizerConfig;
use crate::rmt::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    Nats,
    #[default]
    Bits,
}

impl Units {
    pub fn suffix(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }

    /// Converts a rate in nats to these units.
    pub fn from_nats(self, x: f64) -> f64 {
        match self {
            Units::Nats => x,
            Units::Bits => x / std::f64::consts::LN_2,
        }
    }

    pub fn to_nats(self, x: f64) -> f64 {
        match self {
            Units::Nats => x,
            Units::Bits => x * std::f64::consts::LN_2,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub output: OutputConfig,
    /// Directory that relative side-file paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub m: usize,
    pub n: usize,
    pub l: usize,
    #[serde(default)]
    pub correlation: CorrelationConfig,
    #[serde(default)]
    pub phases: PhaseInit,
    /// Path-loss model; when present, the SNR axis is the transmit power.
    #[serde(default)]
    pub link: Option<LinkConfig>,
}

/// Exponential-model coefficients, or side files that replace them.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationConfig {
    #[serde(default)]
    pub mu_r1: f64,
    #[serde(default)]
    pub mu_t1: f64,
    #[serde(default)]
    pub mu_r2: f64,
    #[serde(default)]
    pub mu_t2: f64,
    pub r1_file: Option<PathBuf>,
    pub t1_file: Option<PathBuf>,
    pub r2_file: Option<PathBuf>,
    pub t2_file: Option<PathBuf>,
}

impl CorrelationConfig {
    fn has_files(&self) -> bool {
        self.r1_file.is_some() || self.t1_file.is_some() || self.r2_file.is_some() || self.t2_file.is_some()
    }

    pub fn is_identity(&self) -> bool {
        !self.has_files() && self.mu_r1 == 0.0 && self.mu_t1 == 0.0 && self.mu_r2 == 0.0 && self.mu_t2 == 0.0
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PhaseInit {
    /// `"zeros"` or `"ramp"` (θ_i = 2πi/L).
    Named(String),
    Values(Vec<f64>),
    File { file: PathBuf },
}

impl Default for PhaseInit {
    fn default() -> Self {
        PhaseInit::Named("zeros".into())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub sigma2_dbm: f64,
    #[serde(default = "ten")]
    pub d_bs_irs: f64,
    #[serde(default = "ten")]
    pub d_irs_ue: f64,
    #[serde(default = "two")]
    pub alpha_bs_irs: f64,
    #[serde(default = "three")]
    pub alpha_irs_ue: f64,
    #[serde(default = "minus_thirty")]
    pub c0_db: f64,
}

fn ten() -> f64 {
    10.0
}
fn two() -> f64 {
    2.0
}
fn three() -> f64 {
    3.0
}
fn minus_thirty() -> f64 {
    -30.0
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Effective SNR grid in dB (used without a link budget).
    #[serde(default)]
    pub snr_db: Vec<f64>,
    /// Transmit power grid in dBm (used with a link budget).
    #[serde(default)]
    pub p_dbm: Vec<f64>,
    /// IRS sizes; empty means the scenario's L.
    #[serde(default)]
    pub l: Vec<usize>,
    #[serde(default)]
    pub eta: Vec<f64>,
    /// Rate thresholds in bits/s/Hz.
    #[serde(default)]
    pub rate_bits: Vec<f64>,
    /// Multiplexing gains for the DMT; empty means 21 points on [0, k].
    #[serde(default)]
    pub m: Vec<f64>,
    /// SNR offset for the numerical DMT slope.
    #[serde(default = "dmt_step")]
    pub dmt_step_db: f64,
}

fn dmt_step() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_streams")]
    pub streams: usize,
    #[serde(default = "tol_mean")]
    pub tol_mean_rel: f64,
    #[serde(default = "tol_var")]
    pub tol_var_rel: f64,
    #[serde(default = "ks_max")]
    pub ks_max: f64,
}

fn default_samples() -> usize {
    100_000
}
fn default_streams() -> usize {
    16
}
fn tol_mean() -> f64 {
    0.02
}
fn tol_var() -> f64 {
    0.10
}
fn ks_max() -> f64 {
    0.02
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: default_samples(),
            streams: default_streams(),
            tol_mean_rel: tol_mean(),
            tol_var_rel: tol_var(),
            ks_max: ks_max(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub eps: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self { eps: d.eps, max_outer: d.max_outer, max_inner: d.max_inner }
    }
}

impl From<SolverSettings> for SolverConfig {
    fn from(s: SolverSettings) -> Self {
        SolverConfig { eps: s.eps, max_outer: s.max_outer, max_inner: s.max_inner }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub units: Units,
    #[serde(default)]
    pub gnuplot: bool,
}

/// One point on the SNR axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPoint {
    /// Transmit power, when a link budget is configured.
    pub p_dbm: Option<f64>,
    pub snr_db: f64,
    pub rho: f64,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        SystemDims::new(s.m, s.n, s.l).map_err(|e| Error::Config(format!("scenario: {e}")))?;
        if self.scenario.link.is_some() && !self.sweep.snr_db.is_empty() {
            return Err(Error::Config("sweep.snr_db cannot be combined with scenario.link; use sweep.p_dbm".into()));
        }
        if self.scenario.link.is_none() && !self.sweep.p_dbm.is_empty() {
            return Err(Error::Config("sweep.p_dbm needs scenario.link".into()));
        }
        if self.sweep.l.iter().any(|&l| l == 0) {
            return Err(Error::Config("sweep.l entries must be positive".into()));
        }
        if let PhaseInit::Named(name) = &s.phases {
            if name != "zeros" && name != "ramp" {
                return Err(Error::Config(format!("scenario.phases: unknown policy \"{name}\"")));
            }
        }
        self.optimizer.validate().map_err(|e| Error::Config(format!("optimizer: {e}")))?;
        if self.mc.streams == 0 {
            return Err(Error::Config("mc.streams must be positive".into()));
        }
        Ok(())
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn solver(&self) -> SolverConfig {
        self.solver.into()
    }

    /// IRS sizes to evaluate.
    pub fn l_grid(&self) -> Vec<usize> {
        if self.sweep.l.is_empty() {
            vec![self.scenario.l]
        } else {
            self.sweep.l.clone()
        }
    }

    /// SNR axis; defaults to a single 10 dB point without a link budget.
    pub fn snr_points(&self) -> Result<Vec<SnrPoint>> {
        let dims = self.dims(self.scenario.l)?;
        match &self.scenario.link {
            Some(link) => {
                if self.sweep.p_dbm.is_empty() {
                    return Err(Error::Config("sweep.p_dbm is empty".into()));
                }
                self.sweep
                    .p_dbm
                    .iter()
                    .map(|&p| {
                        let budget = LinkBudget {
                            p_dbm: p,
                            sigma2_dbm: link.sigma2_dbm,
                            d_bs_irs: link.d_bs_irs,
                            d_irs_ue: link.d_irs_ue,
                            alpha_bs_irs: link.alpha_bs_irs,
                            alpha_irs_ue: link.alpha_irs_ue,
                            c0_db: link.c0_db,
                        };
                        let rho = budget.effective_snr(dims).map_err(|e| Error::Config(format!("link: {e}")))?;
                        Ok(SnrPoint { p_dbm: Some(p), snr_db: 10.0 * rho.log10(), rho })
                    })
                    .collect()
            }
            None => {
                let grid = if self.sweep.snr_db.is_empty() { vec![10.0] } else { self.sweep.snr_db.clone() };
                Ok(grid.into_iter().map(|db| SnrPoint { p_dbm: None, snr_db: db, rho: db_to_linear(db) }).collect())
            }
        }
    }

    pub fn rates_nats(&self) -> Vec<f64> {
        self.sweep.rate_bits.iter().map(|&b| Units::Bits.to_nats(b)).collect()
    }

    pub fn dims(&self, l: usize) -> Result<SystemDims> {
        SystemDims::new(self.scenario.m, self.scenario.n, l).map_err(|e| Error::Config(e.to_string()))
    }

    /// True when every correlation matrix is the identity and `M = N`.
    pub fn is_iid(&self) -> bool {
        self.scenario.correlation.is_identity() && self.scenario.m == self.scenario.n
    }

    pub fn correlation(&self, l: usize) -> Result<CorrelationSet> {
        let dims = self.dims(l)?;
        let c = &self.scenario.correlation;
        if c.has_files() && l != self.scenario.l {
            return Err(Error::Config("correlation side files fix L; sweep.l cannot change it".into()));
        }
        let base = CorrelationSet::exponential(dims, c.mu_r1, c.mu_t1, c.mu_r2, c.mu_t2)
            .map_err(|e| Error::Config(format!("scenario.correlation: {e}")))?;
        let pick = |file: &Option<PathBuf>, fallback: &CMat| -> Result<CMat> {
            match file {
                Some(p) => read_complex_matrix(&self.resolve(p)),
                None => Ok(fallback.clone()),
            }
        };
        let set = CorrelationSet::new(
            pick(&c.r1_file, base.r1())?,
            pick(&c.t1_file, base.t1())?,
            pick(&c.r2_file, base.r2())?,
            pick(&c.t2_file, base.t2())?,
        )
        .map_err(|e| Error::Config(format!("scenario.correlation: {e}")))?;
        Ok(set)
    }

    pub fn phases(&self, l: usize) -> Result<PhaseShifts> {
        let values = match &self.scenario.phases {
            PhaseInit::Named(name) if name == "ramp" => return Ok(PhaseShifts::ramp(l)),
            PhaseInit::Named(_) => return Ok(PhaseShifts::zeros(l)),
            PhaseInit::Values(v) => v.clone(),
            PhaseInit::File { file } => read_phase_file(&self.resolve(file))?,
        };
        if values.len() != l {
            return Err(Error::Config(format!("scenario.phases has {} values, IRS has {l}", values.len())));
        }
        PhaseShifts::new(values).map_err(|e| Error::Config(format!("scenario.phases: {e}")))
    }

    pub fn scenario_at(&self, l: usize, rho: f64) -> Result<Scenario> {
        Scenario::new(self.correlation(l)?, self.phases(l)?, rho)
    }
}

/// Reads a square matrix of whitespace-separated `re im` pairs, row-major,
/// one row per line.
pub fn read_complex_matrix(path: &Path) -> Result<CMat> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        if nums.len() % 2 != 0 {
            return Err(Error::Config(format!("{}:{}: odd number of values", path.display(), lineno + 1)));
        }
        rows.push(nums.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect());
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("{}: matrix is not square", path.display())));
    }
    Ok(CMat::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn read_phase_file(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}
