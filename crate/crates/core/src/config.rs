//! Experiment parameters and the per-slot detection quantities derived from them.
//!
//! Units are fixed throughout the crate: power in W, bandwidth and repetition
//! rate in GHz, pulse width in ns. With these units the filter time-bandwidth
//! product `delta_f * delta_t` is dimensionless.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::timebin::PhasePair;

/// Pump and pair-generation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceParams {
    /// SFWM efficiency coefficient (1/W^2 per unit time-bandwidth product).
    pub a: f64,
    /// Noise-photon generation coefficient (1/W per unit time-bandwidth product).
    pub b: f64,
    /// Filter bandwidth, GHz.
    pub delta_f: f64,
    /// Pump pulse width, ns.
    pub delta_t: f64,
    /// Pump repetition rate, GHz.
    pub rep_rate: f64,
    /// Coupled pump peak power, W.
    pub peak_power: f64,
}

impl SourceParams {
    pub fn time_bandwidth(&self) -> f64 {
        self.delta_f * self.delta_t
    }
}

/// Loss budget and detector of one output channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub out_coupling_db: f64,
    pub channel_loss_db: f64,
    pub detector_efficiency: f64,
    pub dark_rate_hz: f64,
    #[serde(default)]
    pub interferometer_loss_db: f64,
    /// Center wavelength; metadata only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_nm: Option<f64>,
}

/// How `num_pulses` is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseCountBasis {
    /// Signal-detector triggers (time-interval-analyzer start events). The run
    /// length in pump pulses is chosen so the expected trigger count is `num_pulses`.
    #[default]
    Start,
    /// Emitted pump pulses.
    Pump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: SourceParams,
    pub signal: ChannelParams,
    pub idler: ChannelParams,
    /// Number of consecutive pump pulses over which the pump is coherent.
    pub coherence_slots: usize,
    pub num_pulses: u64,
    #[serde(default)]
    pub pulse_count_basis: PulseCountBasis,
    pub phases: PhasePair,
    pub seed: u64,
    pub interferometers_present: bool,
}

/// Detection probability of a photon leaving the chip facet region, including
/// coupling, filtering, optional interferometer excess loss and detector efficiency.
pub fn effective_alpha(ch: &ChannelParams, include_interferometer: bool) -> f64 {
    let mut loss_db = ch.out_coupling_db + ch.channel_loss_db;
    if include_interferometer {
        loss_db += ch.interferometer_loss_db;
    }
    10f64.powf(-loss_db / 10.0) * ch.detector_efficiency
}

/// Dark-count probability per time slot at the given repetition rate (GHz).
pub fn dark_per_slot(ch: &ChannelParams, rep_rate_ghz: f64) -> f64 {
    ch.dark_rate_hz / (rep_rate_ghz * 1e9)
}

pub const DEFAULT_COHERENCE_SLOTS: usize = 1000;
pub const DEFAULT_NUM_PULSES: u64 = 10_000_000;
/// Mean photon number per pulse of the two-photon interference measurement.
pub const INTERFERENCE_MU: f64 = 0.004;
/// Mean photon number per pulse at which the measured CAR peaks.
pub const CAR_PEAK_MU: f64 = 0.001;

/// The operating point of the on-chip source: 12.5 GHz filters, 60 ps pulses at
/// 1 GHz, a = 5.78, b = 1.03, with the pump set for mu = 0.004 per pulse.
pub fn default_config() -> ExperimentConfig {
    let mut source = SourceParams {
        a: 5.78,
        b: 1.03,
        delta_f: 12.5,
        delta_t: 0.060,
        rep_rate: 1.0,
        peak_power: 0.0,
    };
    source.peak_power = analytic::pump_power_for_mu(INTERFERENCE_MU, &source)
        .expect("default source admits a pump solution");
    ExperimentConfig {
        source,
        signal: ChannelParams {
            out_coupling_db: 9.0,
            channel_loss_db: 6.0,
            detector_efficiency: 0.2,
            dark_rate_hz: 50.0,
            interferometer_loss_db: 0.0,
            wavelength_nm: Some(1544.6),
        },
        idler: ChannelParams {
            out_coupling_db: 9.0,
            channel_loss_db: 6.7,
            detector_efficiency: 0.2,
            dark_rate_hz: 10.0,
            interferometer_loss_db: 0.0,
            wavelength_nm: Some(1546.2),
        },
        coherence_slots: DEFAULT_COHERENCE_SLOTS,
        num_pulses: DEFAULT_NUM_PULSES,
        pulse_count_basis: PulseCountBasis::Start,
        phases: PhasePair::new(0.0, 0.0),
        seed: 1,
        interferometers_present: false,
    }
}

/// A broken invariant, located by the struct it lives in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub location: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

pub fn validate(cfg: &ExperimentConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |location: &'static str, message: &str| {
        out.push(Violation {
            location,
            message: message.to_string(),
        })
    };

    let s = &cfg.source;
    if !(s.a > 0.0) {
        push("source", "a must be > 0");
    }
    if !(s.b >= 0.0) {
        push("source", "b must be >= 0");
    }
    if !(s.delta_f > 0.0) {
        push("source", "delta_f must be > 0");
    }
    if !(s.delta_t > 0.0) {
        push("source", "delta_t must be > 0");
    }
    if !(s.rep_rate > 0.0) {
        push("source", "rep_rate must be > 0");
    }
    if !(s.peak_power >= 0.0) || !s.peak_power.is_finite() {
        push("source", "peak_power must be >= 0");
    }

    for (location, ch) in [("signal", &cfg.signal), ("idler", &cfg.idler)] {
        for (name, v) in [
            ("out_coupling_db", ch.out_coupling_db),
            ("channel_loss_db", ch.channel_loss_db),
            ("interferometer_loss_db", ch.interferometer_loss_db),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                push(location, &format!("{name} must be >= 0"));
            }
        }
        if !(0.0..=1.0).contains(&ch.detector_efficiency) {
            push(location, "detector_efficiency out of [0,1]");
        }
        if !(ch.dark_rate_hz >= 0.0) || !ch.dark_rate_hz.is_finite() {
            push(location, "dark_rate_hz must be >= 0");
        }
    }

    if cfg.coherence_slots < 2 {
        push("config", "coherence_slots < 2");
    }
    if cfg.num_pulses < 1 {
        push("config", "num_pulses < 1");
    }
    out
}
