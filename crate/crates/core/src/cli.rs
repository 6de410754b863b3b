//! Command-line front end: subcommands that sweep a configured scenario and
//! emit CSV tables.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::config::{RunConfig, SnrPoint, Units};
use crate::error::{Error, Result};
use crate::monte_carlo::{estimate, SamplerSpec};
use crate::optimizer::optimize;
use crate::outage::{
    dmt_numeric_slope, dmt_quick_approx, finite_snr_dmt, irs_efficiency, min_irs_size, outage_probability,
    outage_rate,
};
use crate::rmt::{asymptotic_limit, gaussian_mi, VarianceVariant};

#[derive(Debug, Parser)]
#[command(name = "irs-outage", version, about = "Outage, DMT and phase-shift design for IRS-aided MIMO links")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; CSV goes to stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Monte-Carlo seed, overriding the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub units: Option<Units>,
    /// Worker threads for sweeps and sampling.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Also write gnuplot-ready two-column series.
    #[arg(long, global = true)]
    pub gnuplot: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Ergodic mutual information over IRS sizes and SNRs.
    Emi,
    /// Outage probability versus rate threshold, theory and Monte-Carlo.
    Outage,
    /// Optimize IRS phases against outage.
    Optimize,
    /// Finite-SNR diversity-multiplexing tradeoff.
    Dmt,
    /// Smallest IRS reaching a target efficiency (i.i.d. channels).
    Size,
    /// Theory versus Monte-Carlo comparison with pass/fail.
    McValidate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Emi => "emi",
            Command::Outage => "outage",
            Command::Optimize => "optimize",
            Command::Dmt => "dmt",
            Command::Size => "size",
            Command::McValidate => "mc_validate",
        }
    }
}

/// A CSV table with string cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Io(io::Error::other(e));
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// One `x y` block per numeric column, keyed on the first column.
    pub fn to_gnuplot(&self) -> String {
        let mut out = String::new();
        for (c, name) in self.header.iter().enumerate().skip(1) {
            let points: Vec<(&str, &str)> = self
                .rows
                .iter()
                .filter(|r| r[c].parse::<f64>().is_ok() && r[0].parse::<f64>().is_ok())
                .map(|r| (r[0].as_str(), r[c].as_str()))
                .collect();
            if points.is_empty() {
                continue;
            }
            out.push_str(&format!("# {} vs {}\n", name, self.header[0]));
            for (x, y) in points {
                out.push_str(&format!("{x} {y}\n"));
            }
            out.push_str("\n\n");
        }
        out
    }

    /// Rows of the named column parsed as numbers (empty cells become NaN).
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[c].parse().unwrap_or(f64::NAN)).collect())
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Everything a subcommand produces.
#[derive(Debug, Default)]
pub struct Output {
    pub tables: Vec<(String, Table)>,
    /// Extra text files (name, contents).
    pub files: Vec<(String, String)>,
}

fn snr_prefix(cfg: &RunConfig) -> Vec<&'static str> {
    if cfg.scenario.link.is_some() {
        vec!["p_dbm", "snr_db"]
    } else {
        vec!["snr_db"]
    }
}

fn snr_cells(pt: &SnrPoint) -> Vec<String> {
    match pt.p_dbm {
        Some(p) => vec![num(p), num(pt.snr_db)],
        None => vec![num(pt.snr_db)],
    }
}

fn sampler(cfg: &RunConfig) -> Result<SamplerSpec> {
    SamplerSpec::new(cfg.mc.seed, cfg.mc.samples, cfg.mc.streams).map_err(|e| Error::Config(format!("mc: {e}")))
}

fn collect_rows(parts: Vec<Result<Vec<Vec<String>>>>) -> Result<Vec<Vec<String>>> {
    let mut rows = Vec::new();
    for p in parts {
        rows.extend(p?);
    }
    Ok(rows)
}

pub fn cmd_emi(cfg: &RunConfig) -> Result<Output> {
    let mut header: Vec<String> = vec!["l".into()];
    header.extend(snr_prefix(cfg).into_iter().map(String::from));
    header.extend([
        "emi_bits".to_string(),
        "emi_nats".into(),
        "emi_inf_bits".into(),
        "emi_inf_nats".into(),
        "eta".into(),
        "var_nats2".into(),
        "var_large_l_nats2".into(),
    ]);
    let points = cfg.snr_points()?;
    let jobs: Vec<(usize, SnrPoint)> = cfg.l_grid().into_iter().flat_map(|l| points.iter().map(move |p| (l, *p))).collect();
    let solver = cfg.solver();
    let parts = jobs
        .par_iter()
        .map(|&(l, pt)| {
            let sc = cfg.scenario_at(l, pt.rho)?;
            let an = gaussian_mi(&sc.spectra()?, &solver, VarianceVariant::SmallL)?;
            let mean = an.mi.mean_nats;
            let inf = if cfg.is_iid() { Some(asymptotic_limit(cfg.scenario.n, pt.rho)?.mean_nats) } else { None };
            let eta = inf.map(|i| irs_efficiency(mean, i)).transpose()?;
            let mut row = vec![l.to_string()];
            row.extend(snr_cells(&pt));
            row.extend([
                num(Units::Bits.from_nats(mean)),
                num(mean),
                opt(inf.map(|i| Units::Bits.from_nats(i))),
                opt(inf),
                opt(eta),
                num(an.mi.var_nats2),
                opt(an.variance_with(VarianceVariant::LargeL).ok()),
            ]);
            Ok(vec![row])
        })
        .collect();
    let mut t = Table::new(header);
    t.rows = collect_rows(parts)?;
    Ok(Output { tables: vec![("emi".into(), t)], files: vec![] })
}

pub fn cmd_outage(cfg: &RunConfig) -> Result<Output> {
    let u = cfg.output.units;
    let mut header: Vec<String> = snr_prefix(cfg).into_iter().map(String::from).collect();
    header.extend([
        format!("rate_threshold_{}", u.suffix()),
        "p_out_theory".into(),
        "p_out_theory_large_l".into(),
        "p_out_mc".into(),
        "mc_ci_low".into(),
        "mc_ci_high".into(),
    ]);
    let rates = cfg.rates_nats();
    let solver = cfg.solver();
    let spec = sampler(cfg)?;
    let mut rows = Vec::new();
    for pt in cfg.snr_points()? {
        if rates.is_empty() {
            continue;
        }
        let sc = cfg.scenario_at(cfg.scenario.l, pt.rho)?;
        let an = gaussian_mi(&sc.spectra()?, &solver, VarianceVariant::SmallL)?;
        let var_large = an.variance_with(VarianceVariant::LargeL).ok();
        let mc = if cfg.mc.samples > 0 { Some(estimate(&sc, &spec, &rates)?) } else { None };
        for (i, &r) in rates.iter().enumerate() {
            let mut row = snr_cells(&pt);
            let est = mc.as_ref().map(|m| m.outage[i]);
            row.extend([
                num(u.from_nats(r)),
                num(outage_probability(an.mi.mean_nats, an.mi.var_nats2, r)?),
                opt(var_large.map(|v| outage_probability(an.mi.mean_nats, v, r)).transpose()?),
                opt(est.map(|e| e.p_hat)),
                opt(est.map(|e| e.ci_low)),
                opt(est.map(|e| e.ci_high)),
            ]);
            rows.push(row);
        }
    }
    let mut t = Table::new(header);
    t.rows = rows;
    Ok(Output { tables: vec![("outage".into(), t)], files: vec![] })
}

pub fn cmd_optimize(cfg: &RunConfig) -> Result<Output> {
    let pt = *cfg.snr_points()?.first().ok_or_else(|| Error::Config("empty SNR axis".into()))?;
    let rate = *cfg
        .rates_nats()
        .first()
        .ok_or_else(|| Error::Config("optimize needs a rate threshold in sweep.rate_bits".into()))?;
    let solver = cfg.solver();
    let sc = cfg.scenario_at(cfg.scenario.l, pt.rho)?;
    let res = optimize(&sc, rate, &sc.phases, &cfg.optimizer, &solver)?;
    log::info!("optimizer stopped after {} iterations ({:?})", res.iterations, res.stop);

    let mut t = Table::new(["iteration", "p_out_theory", "grad_norm"]);
    for (i, g) in res.trajectory.iter().enumerate() {
        t.rows.push(vec![i.to_string(), num(*g), opt(res.grad_norms.get(i).copied())]);
    }
    let theta: String = res.theta.angles().iter().map(|x| format!("{x:.16e}\n")).collect();
    let mut out = Output { tables: vec![("optimize".into(), t)], files: vec![("theta_rad.txt".into(), theta)] };

    if cfg.mc.samples > 0 {
        let spec = sampler(cfg)?;
        let mut s = Table::new(["phases", "p_out_theory", "p_out_mc", "mc_ci_low", "mc_ci_high"]);
        for (label, phases, p) in [
            ("initial", sc.phases.clone(), res.trajectory[0]),
            ("optimized", res.theta.clone(), *res.trajectory.last().expect("trajectory is non-empty")),
        ] {
            let e = estimate(&sc.with_phases(phases)?, &spec, &[rate])?.outage[0];
            s.rows.push(vec![label.into(), num(p), num(e.p_hat), num(e.ci_low), num(e.ci_high)]);
        }
        out.tables.push(("optimize_mc".into(), s));
    }
    Ok(out)
}

pub fn cmd_dmt(cfg: &RunConfig) -> Result<Output> {
    let mut header: Vec<String> = snr_prefix(cfg).into_iter().map(String::from).collect();
    header.extend(["m".to_string(), "d_closed_form".into(), "d_approx".into(), "d_numeric_slope".into()]);
    let solver = cfg.solver();
    let k = cfg.dims(cfg.scenario.l)?.k() as f64;
    let grid: Vec<f64> = if cfg.sweep.m.is_empty() {
        (0..=20).map(|i| if i == 20 { k } else { k * i as f64 / 20.0 }).collect()
    } else {
        cfg.sweep.m.clone()
    };
    let points = cfg.snr_points()?;
    let jobs: Vec<(SnrPoint, f64)> = points.iter().flat_map(|p| grid.iter().map(move |m| (*p, *m))).collect();
    let parts = jobs
        .par_iter()
        .map(|&(pt, m)| {
            let sp = cfg.scenario_at(cfg.scenario.l, pt.rho)?.spectra()?;
            let d = finite_snr_dmt(m, &sp, &solver)?.d;
            let q = dmt_quick_approx(m, &sp, &solver)?;
            let s = dmt_numeric_slope(m, &sp, &solver, cfg.sweep.dmt_step_db)?;
            let mut row = snr_cells(&pt);
            row.extend([num(m), num(d), num(q), num(s)]);
            Ok(vec![row])
        })
        .collect();
    let mut t = Table::new(header);
    t.rows = collect_rows(parts)?;
    Ok(Output { tables: vec![("dmt".into(), t)], files: vec![] })
}

pub fn cmd_size(cfg: &RunConfig) -> Result<Output> {
    if !cfg.is_iid() {
        return Err(Error::Config("size needs identity correlations and M = N".into()));
    }
    let u = cfg.output.units;
    let mut etas: Vec<f64> = Vec::new();
    for &e in &cfg.sweep.eta {
        if !etas.contains(&e) {
            etas.push(e);
        }
    }
    let mut header: Vec<String> = snr_prefix(cfg).into_iter().map(String::from).collect();
    header.extend([
        "eta".to_string(),
        "l_min".into(),
        format!("mean_at_l_{}", u.suffix()),
        format!("mean_inf_{}", u.suffix()),
    ]);
    let points = cfg.snr_points()?;
    let jobs: Vec<(SnrPoint, f64)> = points.iter().flat_map(|p| etas.iter().map(move |e| (*p, *e))).collect();
    let parts = jobs
        .par_iter()
        .map(|&(pt, eta)| {
            let ans = min_irs_size(eta, cfg.scenario.n, pt.rho)?;
            let mut row = snr_cells(&pt);
            row.extend([
                num(eta),
                ans.l_min.map(|l| l.to_string()).unwrap_or_default(),
                num(u.from_nats(ans.mean_at_l)),
                num(u.from_nats(ans.mean_inf)),
            ]);
            Ok(vec![row])
        })
        .collect();
    let mut t = Table::new(header);
    t.rows = collect_rows(parts)?;
    Ok(Output { tables: vec![("size".into(), t)], files: vec![] })
}

pub fn cmd_mc_validate(cfg: &RunConfig) -> Result<Output> {
    let u = cfg.output.units;
    let mut header: Vec<String> = snr_prefix(cfg).into_iter().map(String::from).collect();
    header.extend([
        "metric".to_string(),
        format!("threshold_{}", u.suffix()),
        "theory".into(),
        "empirical".into(),
        "ci_low".into(),
        "ci_high".into(),
        "pass".into(),
    ]);
    let solver = cfg.solver();
    let spec = sampler(cfg)?;
    let mut rows = Vec::new();
    for pt in cfg.snr_points()? {
        let sc = cfg.scenario_at(cfg.scenario.l, pt.rho)?;
        let an = gaussian_mi(&sc.spectra()?, &solver, VarianceVariant::SmallL)?;
        let (mean, var) = (an.mi.mean_nats, an.mi.var_nats2);
        let rates = if cfg.sweep.rate_bits.is_empty() {
            [0.01, 0.05, 0.1, 0.25, 0.5].iter().map(|&p| outage_rate(mean, var, p)).collect::<Result<Vec<_>>>()?
        } else {
            cfg.rates_nats()
        };
        let st = estimate(&sc, &spec, &rates)?;
        let pass = |b: bool| if b { "pass" } else { "fail" }.to_string();
        let mut push = |cells: Vec<String>| {
            let mut row = snr_cells(&pt);
            row.extend(cells);
            rows.push(row);
        };
        push(vec![
            "mean_nats".into(),
            String::new(),
            num(mean),
            num(st.mean),
            num(st.mean_ci.0),
            num(st.mean_ci.1),
            pass((st.mean - mean).abs() <= cfg.mc.tol_mean_rel * mean.abs()),
        ]);
        push(vec![
            "variance_nats2".into(),
            String::new(),
            num(var),
            opt(st.variance),
            String::new(),
            String::new(),
            pass(st.variance.is_some_and(|v| (v - var).abs() <= cfg.mc.tol_var_rel * var)),
        ]);
        for o in &st.outage {
            let p = outage_probability(mean, var, o.threshold_nats)?;
            push(vec![
                "p_out".into(),
                num(u.from_nats(o.threshold_nats)),
                num(p),
                num(o.p_hat),
                num(o.ci_low),
                num(o.ci_high),
                pass(p >= o.ci_low && p <= o.ci_high),
            ]);
        }
        push(vec![
            "ks_distance".into(),
            String::new(),
            String::new(),
            opt(st.ks_distance),
            String::new(),
            String::new(),
            pass(st.ks_distance.is_some_and(|d| d <= cfg.mc.ks_max)),
        ]);
    }
    let mut t = Table::new(header);
    t.rows = rows;
    Ok(Output { tables: vec![("mc_validate".into(), t)], files: vec![] })
}

/// Runs one subcommand on an already-loaded config.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Output> {
    match command {
        Command::Emi => cmd_emi(cfg),
        Command::Outage => cmd_outage(cfg),
        Command::Optimize => cmd_optimize(cfg),
        Command::Dmt => cmd_dmt(cfg),
        Command::Size => cmd_size(cfg),
        Command::McValidate => cmd_mc_validate(cfg),
    }
}

fn write_output(out: &Output, dir: Option<&Path>, gnuplot: bool) -> Result<()> {
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for (name, t) in &out.tables {
                fs::write(dir.join(format!("{name}.csv")), t.to_csv()?)?;
                if gnuplot {
                    fs::write(dir.join(format!("{name}.dat")), t.to_gnuplot())?;
                }
            }
            for (name, text) in &out.files {
                fs::write(dir.join(name), text)?;
            }
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            for (i, (_, t)) in out.tables.iter().enumerate() {
                if i > 0 {
                    writeln!(lock)?;
                }
                lock.write_all(t.to_csv()?.as_bytes())?;
                if gnuplot {
                    writeln!(lock)?;
                    lock.write_all(t.to_gnuplot().as_bytes())?;
                }
            }
            for (name, _) in &out.files {
                log::warn!("{name} not written: no --out directory given");
            }
        }
    }
    Ok(())
}

/// Full CLI run: load config, apply flag overrides, execute, write.
pub fn run(cli: &Cli) -> Result<()> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let mut cfg = RunConfig::from_path(path)?;
    if let Some(seed) = cli.seed {
        cfg.mc.seed = seed;
    }
    if let Some(units) = cli.units {
        cfg.output.units = units;
    }
    let dir = cli.out.clone().or_else(|| cfg.output.dir.clone());
    let gnuplot = cli.gnuplot || cfg.output.gnuplot;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let out = pool.install(|| execute(cli.command, &cfg))?;
    write_output(&out, dir.as_deref(), gnuplot)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quoting_and_header() {
        let mut t = Table::new(["a", "b"]);
        t.rows.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n1,\"x,y\"\n");
    }

    #[test]
    fn gnuplot_blocks() {
        let mut t = Table::new(["x", "y", "z"]);
        t.rows.push(vec!["1".into(), "2".into(), "".into()]);
        t.rows.push(vec!["2".into(), "4".into(), "".into()]);
        let g = t.to_gnuplot();
        assert!(g.starts_with("# y vs x\n1 2\n2 4\n"));
        assert!(!g.contains("# z"));
    }

    #[test]
    fn single_point_emi() {
        let cfg = RunConfig::from_json(r#"{"scenario": {"m": 2, "n": 2, "l": 4}, "sweep": {"snr_db": [10]}}"#).unwrap();
        let out = cmd_emi(&cfg).unwrap();
        let t = &out.tables[0].1;
        assert_eq!(t.rows.len(), 1);
        let bits = t.column("emi_bits").unwrap()[0];
        let nats = t.column("emi_nats").unwrap()[0];
        assert!((bits - nats / std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn empty_thresholds_header_only() {
        let cfg = RunConfig::from_json(r#"{"scenario": {"m": 2, "n": 2, "l": 2}, "mc": {"samples": 10}}"#).unwrap();
        let out = cmd_outage(&cfg).unwrap();
        assert!(out.tables[0].1.rows.is_empty());
        assert_eq!(out.tables[0].1.to_csv().unwrap().lines().count(), 1);
    }
}
