use std::collections::{BTreeMap, VecDeque};
use std::iter::Peekable;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width, in pulse delays, of the accidental reference window.
pub const ACCIDENTAL_HALF_WINDOW: i64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Signal,
    Idler,
}

/// One detector click, as a time-interval analyzer would report it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub slot: u64,
    pub channel: Channel,
}

/// Coincidence counts versus pulse delay (idler slot minus signal slot).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    pub counts: BTreeMap<i64, u64>,
    /// Run length as configured (start events or pump pulses).
    pub num_pulses: u64,
    /// Pump pulses actually simulated.
    pub pump_pulses: u64,
    pub window_delays: Vec<i64>,
    pub signal_clicks: u64,
    pub idler_clicks: u64,
}

impl CoincidenceHistogram {
    pub fn count(&self, delay: i64) -> u64 {
        self.counts.get(&delay).copied().unwrap_or(0)
    }

    pub fn coincidences(&self) -> u64 {
        self.count(0)
    }

    pub fn accidental_total(&self) -> u64 {
        self.window_delays.iter().map(|&d| self.count(d)).sum()
    }
}

/// Delays `-w..=w` without zero.
pub fn accidental_delays(half_window: i64) -> Vec<i64> {
    (-half_window..=half_window).filter(|&d| d != 0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarEstimate {
    pub car: f64,
    pub stderr: f64,
    pub coincidences: u64,
    pub accidentals_mean: f64,
}

/// Zero-delay counts over the mean accidental bin, with Poisson error
/// `CAR sqrt(1/c0 + 1/sum(acc))`.
pub fn estimate_car(hist: &CoincidenceHistogram) -> Result<CarEstimate> {
    if !hist.counts.contains_key(&0) {
        return Err(Error::InsufficientStatistics("histogram has no zero-delay bin".into()));
    }
    let bins = hist.window_delays.iter().filter(|&&d| d != 0).count();
    let acc_total = hist.accidental_total();
    if bins == 0 || acc_total == 0 {
        return Err(Error::InsufficientStatistics(
            "no counts in the accidental window".into(),
        ));
    }
    let mean = acc_total as f64 / bins as f64;
    let c0 = hist.coincidences();
    let car = c0 as f64 / mean;
    let stderr = if c0 > 0 {
        car * (1.0 / c0 as f64 + 1.0 / acc_total as f64).sqrt()
    } else {
        1.0 / mean
    };
    Ok(CarEstimate {
        car,
        stderr,
        coincidences: c0,
        accidentals_mean: mean,
    })
}

struct Runs<I: Iterator<Item = u64>> {
    inner: Peekable<I>,
}

impl<I: Iterator<Item = u64>> Iterator for Runs<I> {
    type Item = (u64, u64);

    fn next(&mut self) -> Option<(u64, u64)> {
        let slot = self.inner.next()?;
        let mut n = 1;
        while self.inner.next_if_eq(&slot).is_some() {
            n += 1;
        }
        Some((slot, n))
    }
}

fn runs<I: IntoIterator<Item = u64>>(it: I) -> Runs<I::IntoIter> {
    Runs {
        inner: it.into_iter().peekable(),
    }
}

/// Coincidence counts between two sorted click streams.
///
/// With `collapse` set, repeated entries of one slot count once (threshold
/// detectors); otherwise every photon pair contributes.
pub fn coincidence_counts<I, J>(
    signal: I,
    idler: J,
    half_window: i64,
    collapse: bool,
) -> (BTreeMap<i64, u64>, u64, u64)
where
    I: IntoIterator<Item = u64>,
    J: IntoIterator<Item = u64>,
{
    let w = half_window.max(0) as u64;
    let mut counts: BTreeMap<i64, u64> = (-half_window..=half_window).map(|d| (d, 0)).collect();
    let mut idler = runs(idler).peekable();
    let mut window: VecDeque<(u64, u64)> = VecDeque::new();
    let mut signal_clicks = 0u64;
    let mut idler_clicks = 0u64;
    let weight = |n: u64| if collapse { 1 } else { n };

    for (s, ms) in runs(signal) {
        signal_clicks += weight(ms);
        while let Some(&(t, _)) = window.front() {
            if t + w < s {
                window.pop_front();
            } else {
                break;
            }
        }
        while let Some(&(t, mt)) = idler.peek() {
            if t > s + w {
                break;
            }
            idler_clicks += weight(mt);
            idler.next();
            if t + w >= s {
                window.push_back((t, mt));
            }
        }
        for &(t, mt) in &window {
            let delay = t as i64 - s as i64;
            *counts.get_mut(&delay).expect("delay inside window") += weight(ms) * weight(mt);
        }
    }
    idler_clicks += idler.map(|(_, m)| weight(m)).sum::<u64>();
    (counts, signal_clicks, idler_clicks)
}
