//! Event-level Monte Carlo of the pair source, its loss channels and
//! threshold detectors.
//!
//! Time is slotted at the pump repetition rate. A run covers a fixed number of
//! pump pulses, split into blocks that are seeded from `(seed, block index)`
//! and simulated in parallel; blocks are merged in index order, so output does
//! not depend on the number of worker threads.

pub mod fringe;
pub mod histogram;
pub mod sampling;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::pair_statistics;
use crate::config::{dark_per_slot, effective_alpha, validate, ExperimentConfig, PulseCountBasis};
use crate::error::{Error, Result};
use crate::timebin::PhasePair;

pub use fringe::{OutcomeTable, PairOutcome};
pub use histogram::{
    accidental_delays, coincidence_counts, estimate_car, CarEstimate, Channel,
    CoincidenceHistogram, DetectionRecord, ACCIDENTAL_HALF_WINDOW,
};
use sampling::{block_rng, for_each_bernoulli, occupied, zero_truncated_poisson};

const TARGET_BLOCK_PULSES: u64 = 1 << 28;

/// Above this pair probability per pulse the single-pair fringe model is rejected.
pub const MAX_FRINGE_PAIR_PROBABILITY: f64 = 0.1;

#[derive(Debug, Clone)]
struct BlockEvents {
    start: u64,
    // Offsets from `start`, sorted, one entry per detected photon or dark count.
    signal: Vec<u32>,
    idler: Vec<u32>,
}

impl BlockEvents {
    fn new(start: u64) -> Self {
        Self {
            start,
            signal: Vec::new(),
            idler: Vec::new(),
        }
    }

    fn push(&mut self, channel: Channel, slot: u64) {
        let off = (slot - self.start) as u32;
        match channel {
            Channel::Signal => self.signal.push(off),
            Channel::Idler => self.idler.push(off),
        }
    }

    fn finish(mut self) -> Self {
        self.signal.sort_unstable();
        self.idler.sort_unstable();
        self
    }
}

/// Raw detector output of one run, before coincidence analysis.
#[derive(Debug, Clone)]
pub struct DetectionStream {
    pump_pulses: u64,
    blocks: Vec<BlockEvents>,
}

impl DetectionStream {
    pub fn pump_pulses(&self) -> u64 {
        self.pump_pulses
    }

    /// Signal slots in increasing order; a slot repeats once per photon.
    pub fn signal_slots(&self) -> impl Iterator<Item = u64> + '_ {
        self.blocks
            .iter()
            .flat_map(|b| b.signal.iter().map(move |&o| b.start + o as u64))
    }

    pub fn idler_slots(&self) -> impl Iterator<Item = u64> + '_ {
        self.blocks
            .iter()
            .flat_map(|b| b.idler.iter().map(move |&o| b.start + o as u64))
    }

    /// Threshold-detector clicks of both channels in slot order.
    pub fn records(&self) -> Vec<DetectionRecord> {
        let mut out: Vec<DetectionRecord> = self
            .signal_slots()
            .map(|slot| DetectionRecord {
                slot,
                channel: Channel::Signal,
            })
            .chain(self.idler_slots().map(|slot| DetectionRecord {
                slot,
                channel: Channel::Idler,
            }))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn histogram(&self, num_pulses: u64, half_window: i64, collapse: bool) -> CoincidenceHistogram {
        let (counts, signal_clicks, idler_clicks) =
            coincidence_counts(self.signal_slots(), self.idler_slots(), half_window, collapse);
        CoincidenceHistogram {
            counts,
            num_pulses,
            pump_pulses: self.pump_pulses,
            window_delays: accidental_delays(half_window),
            signal_clicks,
            idler_clicks,
        }
    }
}

fn check(cfg: &ExperimentConfig) -> Result<()> {
    let violations = validate(cfg);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(violations.iter().map(|v| v.to_string()).collect()))
    }
}

/// Pump pulses to simulate. For start-event counting, enough pulses that the
/// signal detector is expected to fire `num_pulses` times, rounded up to a
/// multiple of `granule`.
fn run_length(cfg: &ExperimentConfig, signal_click_probability: f64, granule: u64) -> Result<u64> {
    let pulses = match cfg.pulse_count_basis {
        PulseCountBasis::Pump => cfg.num_pulses,
        PulseCountBasis::Start => {
            if !(signal_click_probability > 0.0) {
                return Err(Error::InsufficientStatistics(
                    "signal detector can never fire, so no start events occur".into(),
                ));
            }
            let n = (cfg.num_pulses as f64 / signal_click_probability).ceil();
            if n >= u64::MAX as f64 / 2.0 {
                return Err(Error::InsufficientStatistics(
                    "signal click probability too small for the requested start count".into(),
                ));
            }
            n as u64
        }
    };
    Ok(pulses.div_ceil(granule) * granule)
}

fn run_blocks<F>(pump_pulses: u64, block_len: u64, seed: u64, fill: F) -> DetectionStream
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, &mut BlockEvents, u64, u64) + Sync,
{
    let n_blocks = pump_pulses.div_ceil(block_len);
    let blocks = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * block_len;
            let end = (start + block_len).min(pump_pulses);
            let mut rng = block_rng(seed, b);
            let mut ev = BlockEvents::new(start);
            fill(&mut rng, &mut ev, start, end);
            ev.finish()
        })
        .collect();
    DetectionStream {
        pump_pulses,
        blocks,
    }
}

/// Per-pulse Poisson rates of detected events without interferometers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarRates {
    /// Both members of one pair detected.
    pub both: f64,
    /// Signal photon detected alone (pair member or noise).
    pub signal_only: f64,
    pub idler_only: f64,
    pub dark_s: f64,
    pub dark_i: f64,
}

impl CarRates {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let stats = pair_statistics(cfg.source.peak_power, &cfg.source);
        for m in [stats.mu_c, stats.mu_n_s, stats.mu_n_i] {
            if m < 0.0 || !m.is_finite() {
                return Err(Error::NegativeMean(m));
            }
        }
        let a_s = effective_alpha(&cfg.signal, false);
        let a_i = effective_alpha(&cfg.idler, false);
        Ok(Self {
            both: stats.mu_c * a_s * a_i,
            signal_only: stats.mu_c * a_s * (1.0 - a_i) + stats.mu_n_s * a_s,
            idler_only: stats.mu_c * a_i * (1.0 - a_s) + stats.mu_n_i * a_i,
            dark_s: dark_per_slot(&cfg.signal, cfg.source.rep_rate),
            dark_i: dark_per_slot(&cfg.idler, cfg.source.rep_rate),
        })
    }

    pub fn signal_click_probability(&self) -> f64 {
        1.0 - (-(self.both + self.signal_only)).exp() * (1.0 - self.dark_s)
    }
}

/// Detector output of a coincidence run without interferometers.
///
/// Each pulse carries Poisson(mu_c) pairs and Poisson(mu_n) noise photons per
/// channel; each photon survives with its channel's efficiency. By Poisson
/// thinning the detected events split into independent both / signal-only /
/// idler-only streams, which are generated directly.
pub fn simulate_car_events(cfg: &ExperimentConfig) -> Result<DetectionStream> {
    check(cfg)?;
    if cfg.interferometers_present {
        return Err(Error::WrongSetup { expected: false });
    }
    let rates = CarRates::from_config(cfg)?;
    let pump_pulses = run_length(cfg, rates.signal_click_probability(), 1)?;
    let total = rates.both + rates.signal_only + rates.idler_only;
    let p_photon = occupied(total);

    Ok(run_blocks(pump_pulses, TARGET_BLOCK_PULSES, cfg.seed, |rng, ev, start, end| {
        if total > 0.0 {
            for_each_bernoulli(rng, p_photon, start, end, |rng, slot| {
                for _ in 0..zero_truncated_poisson(rng, total) {
                    let u = rng.random::<f64>() * total;
                    if u < rates.both {
                        ev.push(Channel::Signal, slot);
                        ev.push(Channel::Idler, slot);
                    } else if u < rates.both + rates.signal_only {
                        ev.push(Channel::Signal, slot);
                    } else {
                        ev.push(Channel::Idler, slot);
                    }
                }
            });
        }
        for_each_bernoulli(rng, rates.dark_s, start, end, |_, slot| ev.push(Channel::Signal, slot));
        for_each_bernoulli(rng, rates.dark_i, start, end, |_, slot| ev.push(Channel::Idler, slot));
    }))
}

/// Coincidence histogram of a CAR run over delays within the accidental window.
pub fn simulate_car_run(cfg: &ExperimentConfig) -> Result<CoincidenceHistogram> {
    Ok(simulate_car_events(cfg)?.histogram(cfg.num_pulses, ACCIDENTAL_HALF_WINDOW, true))
}

/// Detector output of a two-photon interference run.
///
/// The pump train is tiled into coherence blocks of `coherence_slots` pulses.
/// Each pulse emits one pair with probability mu_c; the pair is delocalized
/// over its block and its joint detection pattern is drawn from the exact
/// amplitude-engine distribution ([`OutcomeTable`]). Noise photons are
/// phase-insensitive: detected with probability alpha/2, in the early or
/// late slot with equal odds.
pub fn simulate_fringe_events(cfg: &ExperimentConfig, phases: PhasePair) -> Result<DetectionStream> {
    check(cfg)?;
    if !cfg.interferometers_present {
        return Err(Error::WrongSetup { expected: true });
    }
    let stats = pair_statistics(cfg.source.peak_power, &cfg.source);
    if stats.mu_c >= MAX_FRINGE_PAIR_PROBABILITY {
        return Err(Error::PairRateTooHigh(stats.mu_c));
    }
    let n = cfg.coherence_slots as u64;
    let a_s = effective_alpha(&cfg.signal, true);
    let a_i = effective_alpha(&cfg.idler, true);
    let d_s = dark_per_slot(&cfg.signal, cfg.source.rep_rate);
    let d_i = dark_per_slot(&cfg.idler, cfg.source.rep_rate);

    let table = if stats.mu_c > 0.0 && a_s + a_i > 0.0 {
        Some(OutcomeTable::new(cfg.coherence_slots, phases, a_s, a_i)?)
    } else {
        None
    };
    let p_pair = table
        .as_ref()
        .map_or(0.0, |t| stats.mu_c * t.detect_probability());
    let noise_s = stats.mu_n_s * a_s / 2.0;
    let noise_i = stats.mu_n_i * a_i / 2.0;

    let signal_click = 1.0 - (-(stats.mu_signal() * a_s / 2.0)).exp() * (1.0 - d_s);
    let pump_pulses = run_length(cfg, signal_click, n)?;
    let block_len = TARGET_BLOCK_PULSES.div_ceil(n) * n;

    Ok(run_blocks(pump_pulses, block_len, cfg.seed, |rng, ev, start, end| {
        if let Some(table) = &table {
            for_each_bernoulli(rng, p_pair, start, end, |rng, pulse| {
                let base = pulse / n * n;
                match table.sample(rng) {
                    PairOutcome::Both { signal, idler } => {
                        ev.push(Channel::Signal, base + signal as u64);
                        ev.push(Channel::Idler, base + idler as u64);
                    }
                    PairOutcome::SignalOnly(s) => ev.push(Channel::Signal, base + s as u64),
                    PairOutcome::IdlerOnly(i) => ev.push(Channel::Idler, base + i as u64),
                }
            });
        }
        for (channel, lambda) in [(Channel::Signal, noise_s), (Channel::Idler, noise_i)] {
            if lambda > 0.0 {
                for_each_bernoulli(rng, occupied(lambda), start, end, |rng, pulse| {
                    for _ in 0..zero_truncated_poisson(rng, lambda) {
                        let late = rng.random::<bool>() as u64;
                        ev.push(channel, pulse + late);
                    }
                });
            }
        }
        for_each_bernoulli(rng, d_s, start, end, |_, slot| ev.push(Channel::Signal, slot));
        for_each_bernoulli(rng, d_i, start, end, |_, slot| ev.push(Channel::Idler, slot));
    }))
}

/// Interference run at one phase setting; the fringe observable is
/// [`CoincidenceHistogram::coincidences`].
pub fn simulate_fringe_run(cfg: &ExperimentConfig, phases: PhasePair) -> Result<CoincidenceHistogram> {
    Ok(simulate_fringe_events(cfg, phases)?.histogram(cfg.num_pulses, ACCIDENTAL_HALF_WINDOW, true))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringePoint {
    pub phi_s: f64,
    pub coincidences: u64,
}

/// Signal phase stepped over `steps` even points of [0, 2pi) at fixed idler
/// phase. Step `k` runs with seed `derive_seed(cfg.seed, k)`.
pub fn fringe_scan(cfg: &ExperimentConfig, phi_i: f64, steps: usize) -> Result<Vec<FringePoint>> {
    (0..steps)
        .map(|k| {
            let phi_s = std::f64::consts::TAU * k as f64 / steps as f64;
            let mut run = *cfg;
            run.seed = sampling::derive_seed(cfg.seed, k as u64);
            let hist = simulate_fringe_run(&run, PhasePair::new(phi_s, phi_i))?;
            Ok(FringePoint {
                phi_s,
                coincidences: hist.coincidences(),
            })
        })
        .collect()
}
