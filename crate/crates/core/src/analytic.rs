//! Closed-form pair, noise and CAR statistics of a pulsed SFWM source.
//!
//! Correlated pairs grow as `a p^2 dF dT`, noise photons as `b p dF dT`. The CAR
//! expressions assume identical channels, so asymmetric setups are reduced to a
//! single channel with the geometric-mean efficiency and arithmetic-mean dark
//! probability (see [`symmetrized_channel`]).

use serde::{Deserialize, Serialize};

use crate::config::{dark_per_slot, effective_alpha, ExperimentConfig, SourceParams};
use crate::error::{Error, Result};

/// Mean photon numbers per pulse at one pump power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairStatistics {
    pub mu_c: f64,
    pub mu_n_s: f64,
    pub mu_n_i: f64,
    /// Per-channel total, `mu_c` plus the mean of the two noise terms.
    pub mu: f64,
}

impl PairStatistics {
    pub fn new(mu_c: f64, mu_n_s: f64, mu_n_i: f64) -> Self {
        Self {
            mu_c,
            mu_n_s,
            mu_n_i,
            mu: mu_c + 0.5 * (mu_n_s + mu_n_i),
        }
    }

    pub fn mu_signal(&self) -> f64 {
        self.mu_c + self.mu_n_s
    }

    pub fn mu_idler(&self) -> f64 {
        self.mu_c + self.mu_n_i
    }
}

pub fn mu_correlated(p: f64, src: &SourceParams) -> f64 {
    src.a * p * p * src.time_bandwidth()
}

pub fn mu_noise(p: f64, src: &SourceParams) -> f64 {
    src.b * p * src.time_bandwidth()
}

/// Statistics at pump power `p`; both channels share the noise coefficient `b`.
pub fn pair_statistics(p: f64, src: &SourceParams) -> PairStatistics {
    let n = mu_noise(p, src);
    PairStatistics::new(mu_correlated(p, src), n, n)
}

/// Non-negative pump power at which `mu_c + mu_n = mu`.
///
/// Evaluated in the rationalized form `2 mu / (T (b + sqrt(b^2 + 4 a mu / T)))`,
/// which equals the textbook root but stays accurate when `mu` is small.
pub fn pump_power_for_mu(mu: f64, src: &SourceParams) -> Result<f64> {
    if mu < 0.0 || !mu.is_finite() {
        return Err(Error::NegativeMean(mu));
    }
    if mu == 0.0 {
        return Ok(0.0);
    }
    let t = src.time_bandwidth();
    let denom = t * (src.b + (src.b * src.b + 4.0 * src.a * mu / t).sqrt());
    if !(denom > 0.0) {
        return Err(Error::NoPumpSolution { mu });
    }
    Ok(2.0 * mu / denom)
}

/// Efficiency and dark probability of the equivalent symmetric channel.
pub fn symmetrized_channel(cfg: &ExperimentConfig, include_interferometer: bool) -> (f64, f64) {
    let a_s = effective_alpha(&cfg.signal, include_interferometer);
    let a_i = effective_alpha(&cfg.idler, include_interferometer);
    let d_s = dark_per_slot(&cfg.signal, cfg.source.rep_rate);
    let d_i = dark_per_slot(&cfg.idler, cfg.source.rep_rate);
    ((a_s * a_i).sqrt(), 0.5 * (d_s + d_i))
}

/// CAR from the pair and noise means: `mu_c a^2 / ((mu_c + mu_n) a + d)^2 + 1`.
pub fn car_from_means(stats: &PairStatistics, alpha: f64, d: f64) -> Result<f64> {
    let singles = stats.mu * alpha + d;
    if !(singles > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    Ok(stats.mu_c * alpha * alpha / (singles * singles) + 1.0)
}

/// CAR at fixed mean photon number with the pump power eliminated.
pub fn car_closed_form(mu: f64, src: &SourceParams, alpha: f64, d: f64) -> Result<f64> {
    if mu < 0.0 {
        return Err(Error::NegativeMean(mu));
    }
    let signal = mu * alpha;
    if !(signal + d > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    let t = src.time_bandwidth();
    let root = src.b + (src.b * src.b + 4.0 * src.a * mu / t).sqrt();
    let dark_factor = signal / (signal + d);
    Ok(dark_factor * dark_factor * 4.0 * src.a / (t * root * root) + 1.0)
}

/// Raw two-photon fringe visibility expected in the presence of noise photons
/// and dark counts.
///
/// True coincidences carry `C = mu_c a_s a_i / 4` (two matched interferometer
/// paths), each channel sees singles `mu a / 2 + d` per slot, so the flat
/// accidental floor is `A = (mu a_s / 2 + d_s)(mu a_i / 2 + d_i)` and
/// `V = [(n-1)/n] C / (C + 2A)`.
pub fn predicted_visibility(
    stats: &PairStatistics,
    alpha_s: f64,
    alpha_i: f64,
    d_s: f64,
    d_i: f64,
    n: usize,
) -> Result<f64> {
    let coincidences = stats.mu_c * alpha_s * alpha_i / 4.0;
    let accidentals =
        (stats.mu_signal() * alpha_s / 2.0 + d_s) * (stats.mu_idler() * alpha_i / 2.0 + d_i);
    let denom = coincidences + 2.0 * accidentals;
    if !(denom > 0.0) {
        return Err(Error::NoCoincidences);
    }
    let finite_train = crate::timebin::ideal_visibility(n)?;
    Ok(finite_train * coincidences / denom)
}

/// Nonlinear coefficient under `mu_c = (gamma p L)^2 dF dT`, i.e. `sqrt(a) / L`.
pub fn estimate_gamma(a: f64, length_m: f64) -> f64 {
    a.sqrt() / length_m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_config;
    use approx::assert_relative_eq;

    fn source(tb: f64) -> SourceParams {
        SourceParams {
            a: 5.78,
            b: 1.03,
            delta_f: tb,
            delta_t: 1.0,
            rep_rate: 1.0,
            peak_power: 0.0,
        }
    }

    /// The quadratic root exactly as printed, for cross-checking the
    /// rationalized evaluation.
    fn textbook_pump(mu: f64, s: &SourceParams) -> f64 {
        let r = s.b / s.a;
        -r / 2.0 + (0.25 * r * r + mu / (s.a * s.time_bandwidth())).sqrt()
    }

    #[test]
    fn operating_point_means() {
        let s = source(0.75);
        let p = 5.037e-3;
        assert_relative_eq!(mu_correlated(p, &s), 1.100e-4, max_relative = 1e-3);
        assert_relative_eq!(mu_noise(p, &s), 3.891e-3, max_relative = 1e-3);
        assert_relative_eq!(mu_correlated(p, &s) + mu_noise(p, &s), 4.00e-3, max_relative = 1e-3);
        assert_eq!(mu_correlated(0.0, &s), 0.0);
        assert_eq!(mu_noise(0.0, &s), 0.0);
        assert_relative_eq!(mu_correlated(2.0 * p, &s), 4.0 * mu_correlated(p, &s), max_relative = 1e-14);
    }

    #[test]
    fn pump_inversion() {
        let s = source(0.75);
        let p = pump_power_for_mu(0.004, &s).unwrap();
        assert_relative_eq!(p, 5.037e-3, max_relative = 5e-4);
        assert_relative_eq!(p, textbook_pump(0.004, &s), max_relative = 1e-12);
        assert_eq!(pump_power_for_mu(0.0, &s).unwrap(), 0.0);

        let mut dead = s;
        dead.a = 0.0;
        dead.b = 0.0;
        assert!(matches!(pump_power_for_mu(1e-3, &dead), Err(Error::NoPumpSolution { .. })));
        // a = 0 with noise alone still inverts linearly
        dead.b = 2.0;
        assert_relative_eq!(pump_power_for_mu(1e-3, &dead).unwrap(), 1e-3 / (2.0 * 0.75), max_relative = 1e-14);
    }

    #[test]
    fn car_from_means_cases() {
        let stats = PairStatistics::new(1.10e-4, 3.89e-3, 3.89e-3);
        let car = car_from_means(&stats, 0.0058, 0.0).unwrap();
        assert!((car - 7.9).abs() < 0.1, "{car}");

        let clean = PairStatistics::new(0.01, 0.0, 0.0);
        assert_relative_eq!(car_from_means(&clean, 0.3, 0.0).unwrap(), 1.0 / 0.01 + 1.0, max_relative = 1e-12);

        let noise_only = PairStatistics::new(0.0, 0.01, 0.01);
        assert_eq!(car_from_means(&noise_only, 0.3, 1e-6).unwrap(), 1.0);

        let empty = PairStatistics::new(0.0, 0.0, 0.0);
        assert_eq!(car_from_means(&empty, 0.3, 0.0), Err(Error::ZeroDenominator));
    }

    #[test]
    fn closed_form_reference_points() {
        let previous = source(2.5);
        let c = car_closed_form(0.004, &previous, 0.0058, 0.0).unwrap();
        assert!((c - 3.1).abs() < 0.1, "{c}");
        let c = car_closed_form(0.004, &previous, 0.0058, 7e-6).unwrap();
        assert!((c - 2.2).abs() < 0.15, "{c}");
        let c = car_closed_form(0.001, &source(0.75), 0.0058, 5e-8).unwrap();
        assert!((c - 8.0).abs() < 0.1, "{c}");
        assert!((7.7..=9.7).contains(&c));
    }

    #[test]
    fn closed_form_is_composition() {
        for i in 0..10 {
            let mu = 1e-5 * 10f64.powf(4.0 * i as f64 / 9.0);
            for j in 0..10 {
                let tb = 0.1 * 10f64.powf(2.0 * j as f64 / 9.0);
                let s = source(tb);
                let p = pump_power_for_mu(mu, &s).unwrap();
                let via_means = car_from_means(&pair_statistics(p, &s), 0.0058, 3e-8).unwrap();
                let closed = car_closed_form(mu, &s, 0.0058, 3e-8).unwrap();
                assert_relative_eq!(via_means, closed, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn visibility_at_operating_point() {
        let cfg = default_config();
        let stats = pair_statistics(cfg.source.peak_power, &cfg.source);
        let a_s = effective_alpha(&cfg.signal, true);
        let a_i = effective_alpha(&cfg.idler, true);
        let v = predicted_visibility(&stats, a_s, a_i, 0.0, 0.0, 1_000_000).unwrap();
        assert!((v - 0.775).abs() < 0.002, "{v}");

        let clean = PairStatistics::new(1e-3, 0.0, 0.0);
        let v = predicted_visibility(&clean, 0.1, 0.1, 0.0, 0.0, 1_000_000).unwrap();
        assert_relative_eq!(v, 0.999999 / (1.0 + 2.0 * 1e-3), max_relative = 1e-12);
        let v = predicted_visibility(&clean, 0.1, 0.1, 0.0, 0.0, 2).unwrap();
        assert!((v - 0.5).abs() < 2e-3);

        let empty = PairStatistics::new(0.0, 0.0, 0.0);
        assert_eq!(predicted_visibility(&empty, 0.1, 0.1, 0.0, 0.0, 10), Err(Error::NoCoincidences));
    }

    #[test]
    fn gamma_from_a() {
        let g = estimate_gamma(5.78, 420e-6);
        assert_relative_eq!(g, 5724.3, max_relative = 1e-4);
        assert!((g - 5900.0).abs() / 5900.0 < 0.1);
        assert_eq!(estimate_gamma(1.0, 1.0), 1.0);
        assert_relative_eq!(estimate_gamma(2.0, 0.5), 2.0 * estimate_gamma(2.0, 1.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn pump_round_trip(mu in 1e-5..0.1f64, tb in 0.1..10.0f64) {
                let s = source(tb);
                let p = pump_power_for_mu(mu, &s).unwrap();
                let back = mu_correlated(p, &s) + mu_noise(p, &s);
                prop_assert!((back - mu).abs() <= 1e-12 * mu);
            }

            #[test]
            fn pump_increasing_in_mu(mu in 1e-6..0.1f64, bump in 1e-9..1e-2f64) {
                let s = source(0.75);
                prop_assert!(pump_power_for_mu(mu + bump, &s).unwrap() > pump_power_for_mu(mu, &s).unwrap());
            }

            #[test]
            fn car_decreasing_in_time_bandwidth(mu in 1e-5..0.1f64, tb in 0.1..10.0f64, k in 1.01..3.0f64, d in 0.0..1e-5f64) {
                let lo = car_closed_form(mu, &source(tb), 0.0058, d).unwrap();
                let hi = car_closed_form(mu, &source(tb * k), 0.0058, d).unwrap();
                prop_assert!(hi < lo);
            }

            #[test]
            fn car_rises_as_mu_falls_without_darks(mu in 1e-6..1.0f64, k in 1.01..10.0f64) {
                let s = source(0.75);
                let low = car_closed_form(mu, &s, 0.0058, 0.0).unwrap();
                let high = car_closed_form(mu * k, &s, 0.0058, 0.0).unwrap();
                prop_assert!(low > high);
                prop_assert!(high > 1.0);
            }

            #[test]
            fn visibility_falls_with_noise(b in 0.0..5.0f64, db in 0.01..1.0f64) {
                let mut s = source(0.75);
                s.b = b;
                let p = pump_power_for_mu(0.004, &s).unwrap();
                let v_lo = predicted_visibility(&pair_statistics(p, &s), 6e-3, 5e-3, 5e-8, 1e-8, 1000).unwrap();
                s.b = b + db;
                let p = pump_power_for_mu(0.004, &s).unwrap();
                let v_hi = predicted_visibility(&pair_statistics(p, &s), 6e-3, 5e-3, 5e-8, 1e-8, 1000).unwrap();
                prop_assert!(v_hi < v_lo);
            }
        }
    }
}
