//! Monte-Carlo sampling of the cascaded channel and empirical statistics of
//! its mutual information.
//!
//! Every stream owns a ChaCha8 generator keyed by `(seed, stream index)`, so
//! results are bit-identical regardless of how rayon schedules the streams.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::Scenario;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::normal::norm_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerSpec {
    pub seed: u64,
    pub n_samples: usize,
    pub n_streams: usize,
}

impl SamplerSpec {
    pub fn new(seed: u64, n_samples: usize, n_streams: usize) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::invalid("at least one sample is required"));
        }
        if n_streams == 0 {
            return Err(Error::invalid("at least one stream is required"));
        }
        Ok(Self { seed, n_samples, n_streams })
    }

    /// Samples assigned to stream `i`; the first `n % streams` get one extra.
    pub fn stream_len(&self, i: usize) -> usize {
        let base = self.n_samples / self.n_streams;
        base + usize::from(i < self.n_samples % self.n_streams)
    }

    pub fn stream_rng(&self, i: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        rng
    }
}

/// Circularly-symmetric complex Gaussian with variance `var`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    Complex64::from_polar((var * -u1.ln()).sqrt(), 2.0 * std::f64::consts::PI * u2)
}

/// `rows × cols` matrix of i.i.d. CN(0, var) entries, filled column-major.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, var: f64) -> CMat {
    let data: Vec<Complex64> = (0..rows * cols).map(|_| complex_gaussian(rng, var)).collect();
    CMat::from_vec(rows, cols, data)
}

/// Square roots and the phase-rotated middle factor, computed once per scenario.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    r1_sqrt: CMat,
    t1_sqrt: CMat,
    r2_sqrt: CMat,
    t2_sqrt: CMat,
    /// `T1^½ Ψ R2^½`.
    middle: CMat,
    rho: f64,
    m: usize,
    n: usize,
    l: usize,
}

impl ChannelSampler {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let dims = scenario.dims();
        let r1_sqrt = linalg::sqrt_psd(scenario.corr.r1(), "R1")?;
        let t1_sqrt = linalg::sqrt_psd(scenario.corr.t1(), "T1")?;
        let r2_sqrt = linalg::sqrt_psd(scenario.corr.r2(), "R2")?;
        let t2_sqrt = linalg::sqrt_psd(scenario.corr.t2(), "T2")?;
        let psi = scenario.phases.psi();
        let mut scaled = t1_sqrt.clone();
        for (mut col, p) in scaled.column_iter_mut().zip(&psi) {
            col *= *p;
        }
        let middle = scaled * &r2_sqrt;
        Ok(Self { r1_sqrt, t1_sqrt, r2_sqrt, t2_sqrt, middle, rho: scenario.rho, m: dims.m, n: dims.n, l: dims.l })
    }

    /// One draw of the two hops `H1 = R1^½ X T1^½` and `H2 = R2^½ Y T2^½`.
    pub fn draw_hops<R: Rng + ?Sized>(&self, rng: &mut R) -> (CMat, CMat) {
        let x = complex_gaussian_matrix(rng, self.n, self.l, 1.0 / self.l as f64);
        let y = complex_gaussian_matrix(rng, self.l, self.m, 1.0 / self.m as f64);
        (&self.r1_sqrt * x * &self.t1_sqrt, &self.r2_sqrt * y * &self.t2_sqrt)
    }

    /// `log det(I + ρ H H^H)` in nats for one channel draw.
    pub fn draw_mi<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let x = complex_gaussian_matrix(rng, self.n, self.l, 1.0 / self.l as f64);
        let y = complex_gaussian_matrix(rng, self.l, self.m, 1.0 / self.m as f64);
        let h = &self.r1_sqrt * x * &self.middle * y * &self.t2_sqrt;
        let gram = if self.n <= self.m { &h * h.adjoint() } else { h.adjoint() * &h };
        linalg::log_det_identity_plus(&(gram * Complex64::new(self.rho, 0.0)))
    }
}

/// Draws one MI sample from a fresh sampler.
pub fn draw_mi_sample<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<f64> {
    ChannelSampler::new(scenario)?.draw_mi(rng)
}

/// Streaming mean/variance accumulator with an associative merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMoments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        Self { n, mean, m2 }
    }

    /// Unbiased variance; `None` with fewer than two samples.
    pub fn variance(&self) -> Option<f64> {
        (self.n >= 2).then(|| self.m2 / (self.n - 1) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutageEstimate {
    pub threshold_nats: f64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub hits: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalStats {
    pub n: usize,
    pub mean: f64,
    pub variance: Option<f64>,
    pub mean_ci: (f64, f64),
    pub outage: Vec<OutageEstimate>,
    pub ks_distance: Option<f64>,
    #[serde(skip)]
    pub sorted: Vec<f64>,
}

const Z95: f64 = 1.959_963_984_540_054;

impl EmpiricalStats {
    pub fn from_samples(samples: Vec<f64>, thresholds: &[f64]) -> Self {
        let mut moments = RunningMoments::default();
        samples.iter().for_each(|&x| moments.push(x));
        Self::build(samples, moments, thresholds)
    }

    fn build(mut samples: Vec<f64>, moments: RunningMoments, thresholds: &[f64]) -> Self {
        samples.sort_by(f64::total_cmp);
        let n = samples.len();
        let variance = moments.variance();
        let half = variance.map_or(f64::NAN, |v| Z95 * (v / n as f64).sqrt());
        let mut out = Self {
            n,
            mean: moments.mean,
            variance,
            mean_ci: (moments.mean - half, moments.mean + half),
            outage: Vec::new(),
            ks_distance: None,
            sorted: samples,
        };
        out.outage = thresholds.iter().map(|&r| out.outage_at(r)).collect();
        out.ks_distance = out.ks_to_fitted_normal();
        out
    }

    /// Fraction of samples strictly below `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&s| s < x) as f64 / self.n as f64
    }

    fn outage_at(&self, r: f64) -> OutageEstimate {
        let hits = self.sorted.partition_point(|&s| s < r);
        let n = self.n as f64;
        let p = hits as f64 / n;
        if hits < 30 {
            log::debug!("outage estimate at {r} rests on {hits} hits; normal CI is rough");
        }
        let half = Z95 * (p * (1.0 - p) / n).sqrt();
        OutageEstimate {
            threshold_nats: r,
            p_hat: p,
            ci_low: (p - half).max(0.0),
            ci_high: (p + half).min(1.0),
            hits,
        }
    }

    /// `sup_x |F_emp(x) − Φ((x − mean)/sd)|` with the sample mean and sd.
    fn ks_to_fitted_normal(&self) -> Option<f64> {
        let sd = self.variance?.sqrt();
        if !(sd > 0.0) {
            return None;
        }
        let n = self.n as f64;
        let d = self.sorted.iter().enumerate().fold(0.0f64, |acc, (i, &x)| {
            let f = norm_cdf((x - self.mean) / sd);
            acc.max((i + 1) as f64 / n - f).max(f - i as f64 / n)
        });
        Some(d)
    }
}

/// Samples of every stream, concatenated in stream order.
pub fn sample_mi(scenario: &Scenario, spec: &SamplerSpec) -> Result<Vec<f64>> {
    let sampler = ChannelSampler::new(scenario)?;
    let per_stream: Vec<Result<Vec<f64>>> = (0..spec.n_streams)
        .into_par_iter()
        .map(|i| {
            let mut rng = spec.stream_rng(i);
            (0..spec.stream_len(i)).map(|_| sampler.draw_mi(&mut rng)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(spec.n_samples);
    for s in per_stream {
        out.extend(s?);
    }
    Ok(out)
}

/// Empirical mean, variance, outage frequencies and KS distance.
pub fn estimate(scenario: &Scenario, spec: &SamplerSpec, thresholds: &[f64]) -> Result<EmpiricalStats> {
    let sampler = ChannelSampler::new(scenario)?;
    let per_stream: Vec<Result<(Vec<f64>, RunningMoments)>> = (0..spec.n_streams)
        .into_par_iter()
        .map(|i| {
            let mut rng = spec.stream_rng(i);
            let mut acc = RunningMoments::default();
            let mut xs = Vec::with_capacity(spec.stream_len(i));
            for _ in 0..spec.stream_len(i) {
                let x = sampler.draw_mi(&mut rng)?;
                acc.push(x);
                xs.push(x);
            }
            Ok((xs, acc))
        })
        .collect();
    let mut samples = Vec::with_capacity(spec.n_samples);
    let mut moments = RunningMoments::default();
    for s in per_stream {
        let (xs, acc) = s?;
        samples.extend(xs);
        moments = moments.merge(&acc);
    }
    Ok(EmpiricalStats::build(samples, moments, thresholds))
}

/// Average of `H1 H1^H` over `draws` samples (calibration helper).
pub fn mean_first_hop_gram(scenario: &Scenario, seed: u64, draws: usize) -> Result<CMat> {
    let sampler = ChannelSampler::new(scenario)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sampler.n;
    let mut acc = DMatrix::<Complex64>::zeros(n, n);
    for _ in 0..draws {
        let (h1, _) = sampler.draw_hops(&mut rng);
        acc += &h1 * h1.adjoint();
    }
    Ok(acc / Complex64::new(draws as f64, 0.0))
}
