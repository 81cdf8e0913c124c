//! Subcommand implementations. Each writes its files into `--out-dir`
//! together with the resolved `config.json` and a `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use sfwm_core::analytic::{
    car_closed_form, car_from_means, pair_statistics, predicted_visibility, pump_power_for_mu,
    symmetrized_channel, PairStatistics,
};
use sfwm_core::config::{dark_per_slot, effective_alpha, ExperimentConfig};
use sfwm_core::fit::{fit_fringe, fit_scaling, FringeFit};
use sfwm_core::montecarlo::{estimate_car, fringe_scan, simulate_car_run};

use crate::io::{load_config, parse_phase, read_fringe_csv, read_scaling_csv, write_csv, write_json};
use crate::manifest::RunManifest;

pub const DEFAULT_OUT_DIR: &str = "sfwm-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    /// Mean photon number per pulse (pump power from the inversion).
    Mu,
    /// Coupled peak pump power, W.
    Power,
    /// Filter time-bandwidth product at fixed mu (pulse width varied).
    Dfdt,
}

impl SweepVar {
    fn column(self) -> &'static str {
        match self {
            SweepVar::Mu => "mu",
            SweepVar::Power => "power",
            SweepVar::Dfdt => "dfdt",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyticOpts {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub sweep: SweepVar,
    #[arg(long)]
    pub start: f64,
    #[arg(long)]
    pub stop: f64,
    #[arg(long)]
    pub steps: usize,
    /// Space points logarithmically.
    #[arg(long)]
    pub log: bool,
    /// Fixed mean photon number for `--sweep dfdt` (default: the config's).
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value = DEFAULT_OUT_DIR)]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McCarOpts {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Run length in start pulses (or pump pulses, per the config's basis).
    #[arg(long)]
    pub pulses: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Set the pump for this mean photon number per pulse.
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value = DEFAULT_OUT_DIR)]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McFringeOpts {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Idler interferometer phase: radians, `pi`, `pi/2`, ...
    #[arg(long, default_value = "0")]
    pub phi_i: String,
    #[arg(long, default_value_t = 16)]
    pub steps: usize,
    #[arg(long)]
    pub pulses: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value = DEFAULT_OUT_DIR)]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// Columns power,mu_c,mu_n_s,mu_n_i.
    Scaling,
    /// Columns phi_s,coincidences.
    Fringe,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitOpts {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub model: FitModel,
    /// Time-bandwidth product for the scaling model (default: the config's).
    #[arg(long)]
    pub dfdt: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_OUT_DIR)]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(PathBuf::from(name));
        self.dir.join(name)
    }

    fn finish<O: Serialize>(mut self, cfg: &ExperimentConfig, name: &str, opts: &O) -> Result<Vec<PathBuf>> {
        let cfg_path = self.path("config.json");
        write_json(&cfg_path, cfg)?;
        let args = serde_json::to_value(opts)?;
        let manifest = RunManifest::new(cfg, name, args, self.files.clone());
        let mut all: Vec<PathBuf> = self.files.iter().map(|f| self.dir.join(f)).collect();
        all.push(manifest.write(&self.dir)?);
        Ok(all)
    }
}

fn sweep_points(start: f64, stop: f64, steps: usize, log: bool) -> Result<Vec<f64>> {
    ensure!(steps > 0, "zero-length sweep: --steps must be at least 1");
    ensure!(start > 0.0 && stop > 0.0, "sweep range must be positive");
    ensure!(stop >= start, "sweep range must satisfy start <= stop");
    if steps == 1 {
        return Ok(vec![start]);
    }
    Ok((0..steps)
        .map(|k| {
            let f = k as f64 / (steps - 1) as f64;
            if log {
                start * (stop / start).powf(f)
            } else {
                start + (stop - start) * f
            }
        })
        .collect())
}

fn set_mu(cfg: &mut ExperimentConfig, mu: Option<f64>) -> Result<()> {
    if let Some(mu) = mu {
        ensure!(mu >= 0.0, "--mu must be non-negative");
        cfg.source.peak_power = pump_power_for_mu(mu, &cfg.source)?;
    }
    Ok(())
}

fn visibility(cfg: &ExperimentConfig, stats: &PairStatistics) -> Result<f64> {
    Ok(predicted_visibility(
        stats,
        effective_alpha(&cfg.signal, true),
        effective_alpha(&cfg.idler, true),
        dark_per_slot(&cfg.signal, cfg.source.rep_rate),
        dark_per_slot(&cfg.idler, cfg.source.rep_rate),
        cfg.coherence_slots,
    )?)
}

/// Closed-form sweep: columns `<swept>,mu_c,mu_n,car,predicted_visibility`.
pub fn analytic(opts: &AnalyticOpts) -> Result<Vec<PathBuf>> {
    let cfg = load_config(opts.config.as_deref())?;
    let points = sweep_points(opts.start, opts.stop, opts.steps, opts.log)?;
    let (alpha, d) = symmetrized_channel(&cfg, false);
    let base_stats = pair_statistics(cfg.source.peak_power, &cfg.source);
    let fixed_mu = opts.mu.unwrap_or(base_stats.mu);

    let mut out = Outputs::new(&opts.out_dir)?;
    let path = out.path("analytic.csv");
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&path)?;
    w.write_record([opts.sweep.column(), "mu_c", "mu_n", "car", "predicted_visibility"])?;
    for x in points {
        let mut c = cfg;
        let (stats, car) = match opts.sweep {
            SweepVar::Mu => {
                let p = pump_power_for_mu(x, &c.source)?;
                (pair_statistics(p, &c.source), car_closed_form(x, &c.source, alpha, d)?)
            }
            SweepVar::Power => {
                let stats = pair_statistics(x, &c.source);
                (stats, car_from_means(&stats, alpha, d)?)
            }
            SweepVar::Dfdt => {
                c.source.delta_t = x / c.source.delta_f;
                let p = pump_power_for_mu(fixed_mu, &c.source)?;
                (pair_statistics(p, &c.source), car_closed_form(fixed_mu, &c.source, alpha, d)?)
            }
        };
        let v = visibility(&c, &stats)?;
        w.write_record([x, stats.mu_c, stats.mu_n_s, car, v].map(|f| f.to_string()))?;
    }
    w.flush()?;
    drop(w);
    out.finish(&cfg, "analytic", opts)
}

#[derive(Debug, Serialize)]
struct HistogramRow {
    delay: i64,
    counts: u64,
}

#[derive(Debug, Serialize)]
struct CarReport {
    car: f64,
    stderr: f64,
    pulses: u64,
    seed: u64,
    coincidences: u64,
    accidentals_mean: f64,
    pump_pulses: u64,
    mu: f64,
    analytic_car: f64,
}

#[derive(Debug, Serialize)]
struct ErrorReport {
    error: String,
    pulses: u64,
    seed: u64,
}

/// Monte Carlo CAR run: `histogram.csv` (delay,counts) and `car.json`.
pub fn mc_car(opts: &McCarOpts) -> Result<Vec<PathBuf>> {
    let mut cfg = load_config(opts.config.as_deref())?;
    cfg.interferometers_present = false;
    if let Some(p) = opts.pulses {
        cfg.num_pulses = p;
    }
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    set_mu(&mut cfg, opts.mu)?;
    ensure!(cfg.num_pulses >= 1, "--pulses must be at least 1");

    let hist = simulate_car_run(&cfg)?;
    let mut out = Outputs::new(&opts.out_dir)?;
    let rows: Vec<HistogramRow> = hist
        .counts
        .iter()
        .map(|(&delay, &counts)| HistogramRow { delay, counts })
        .collect();
    write_csv(&out.path("histogram.csv"), &rows)?;

    let report_path = out.path("car.json");
    match estimate_car(&hist) {
        Ok(est) => {
            let stats = pair_statistics(cfg.source.peak_power, &cfg.source);
            let (alpha, d) = symmetrized_channel(&cfg, false);
            write_json(
                &report_path,
                &CarReport {
                    car: est.car,
                    stderr: est.stderr,
                    pulses: cfg.num_pulses,
                    seed: cfg.seed,
                    coincidences: est.coincidences,
                    accidentals_mean: est.accidentals_mean,
                    pump_pulses: hist.pump_pulses,
                    mu: stats.mu,
                    analytic_car: car_closed_form(stats.mu, &cfg.source, alpha, d)?,
                },
            )?;
            out.finish(&cfg, "mc-car", opts)
        }
        Err(e) => {
            write_json(
                &report_path,
                &ErrorReport {
                    error: e.to_string(),
                    pulses: cfg.num_pulses,
                    seed: cfg.seed,
                },
            )?;
            out.finish(&cfg, "mc-car", opts)?;
            Err(e.into())
        }
    }
}

#[derive(Debug, Serialize)]
struct FringeRow {
    phi_s: f64,
    coincidences: u64,
}

#[derive(Debug, Serialize)]
struct FringeReport {
    #[serde(flatten)]
    fit: FringeFit,
    phi_i: f64,
    steps: usize,
    pulses: u64,
    seed: u64,
    predicted_visibility: f64,
}

/// Monte Carlo fringe: `fringe.csv` (phi_s,coincidences) and `fringe_fit.json`.
pub fn mc_fringe(opts: &McFringeOpts) -> Result<Vec<PathBuf>> {
    ensure!(opts.steps >= 4, "--steps must be at least 4 (got {})", opts.steps);
    let phi_i = parse_phase(&opts.phi_i)?;
    let mut cfg = load_config(opts.config.as_deref())?;
    cfg.interferometers_present = true;
    if let Some(p) = opts.pulses {
        cfg.num_pulses = p;
    }
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    set_mu(&mut cfg, opts.mu)?;
    cfg.phases.phi_i = phi_i;

    let points = fringe_scan(&cfg, phi_i, opts.steps)?;
    let mut out = Outputs::new(&opts.out_dir)?;
    let rows: Vec<FringeRow> = points
        .iter()
        .map(|p| FringeRow {
            phi_s: p.phi_s,
            coincidences: p.coincidences,
        })
        .collect();
    write_csv(&out.path("fringe.csv"), &rows)?;

    let samples: Vec<(f64, f64)> = points.iter().map(|p| (p.phi_s, p.coincidences as f64)).collect();
    let fit = fit_fringe(&samples)?;
    let stats = pair_statistics(cfg.source.peak_power, &cfg.source);
    write_json(
        &out.path("fringe_fit.json"),
        &FringeReport {
            fit,
            phi_i,
            steps: opts.steps,
            pulses: cfg.num_pulses,
            seed: cfg.seed,
            predicted_visibility: visibility(&cfg, &stats)?,
        },
    )?;
    out.finish(&cfg, "mc-fringe", opts)
}

/// Fit a data CSV; writes `fit.json`.
pub fn fit(opts: &FitOpts) -> Result<Vec<PathBuf>> {
    let cfg = load_config(opts.config.as_deref())?;
    let mut out = Outputs::new(&opts.out_dir)?;
    let report = match opts.model {
        FitModel::Scaling => {
            let data = read_scaling_csv(&opts.data)
                .with_context(|| format!("scaling data {}", opts.data.display()))?;
            let tb = opts.dfdt.unwrap_or(cfg.source.time_bandwidth());
            if !(tb > 0.0) {
                bail!("--dfdt must be positive");
            }
            serde_json::to_value(fit_scaling(&data, tb)?)?
        }
        FitModel::Fringe => {
            let data = read_fringe_csv(&opts.data)
                .with_context(|| format!("fringe data {}", opts.data.display()))?;
            serde_json::to_value(fit_fringe(&data)?)?
        }
    };
    write_json(&out.path("fit.json"), &report)?;
    out.finish(&cfg, "fit", opts)
}
