//! Single-pair amplitude engine for time-bin entanglement.
//!
//! A pair created by an N-pulse coherent pump train is held as a dense complex
//! matrix indexed by (signal slot, idler slot). Array index `j` stands for time
//! slot `j + 1`. A 1-bit-delay interferometer maps `|k>` to
//! `(|k> + e^{i phi} |k+1>) / 2` in the detected output port; the other port
//! is discarded and its weight accumulated in `loss_weight`.

use std::f64::consts::TAU;

use ndarray::{s, Array2, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interferometer phase differences, radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhasePair {
    pub phi_s: f64,
    pub phi_i: f64,
}

impl PhasePair {
    pub fn new(phi_s: f64, phi_i: f64) -> Self {
        Self { phi_s, phi_i }
    }

    pub fn sum(&self) -> f64 {
        self.phi_s + self.phi_i
    }

    /// Both phases wrapped into [0, 2pi), for reporting.
    pub fn reduced(&self) -> Self {
        Self {
            phi_s: self.phi_s.rem_euclid(TAU),
            phi_i: self.phi_i.rem_euclid(TAU),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Signal,
    Idler,
}

impl Mode {
    fn axis(self) -> Axis {
        match self {
            Mode::Signal => Axis(0),
            Mode::Idler => Axis(1),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Signal => "signal",
            Mode::Idler => "idler",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeBinState {
    n_slots: usize,
    amplitudes: Array2<Complex64>,
    loss_weight: f64,
    normalized: bool,
    signal_mzi: bool,
    idler_mzi: bool,
}

impl TimeBinState {
    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn amplitudes(&self) -> &Array2<Complex64> {
        &self.amplitudes
    }

    /// Amplitude at 1-based (signal slot, idler slot); zero outside the array.
    pub fn amplitude(&self, signal_slot: usize, idler_slot: usize) -> Complex64 {
        if signal_slot == 0 || idler_slot == 0 {
            return Complex64::new(0.0, 0.0);
        }
        self.amplitudes
            .get((signal_slot - 1, idler_slot - 1))
            .copied()
            .unwrap_or_default()
    }

    /// Probability weight removed by discarded interferometer ports.
    pub fn loss_weight(&self) -> f64 {
        self.loss_weight
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn has_mzi(&self, mode: Mode) -> bool {
        match mode {
            Mode::Signal => self.signal_mzi,
            Mode::Idler => self.idler_mzi,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Detection probabilities per slot of one mode, summed over the other.
    pub fn marginal(&self, mode: Mode) -> Vec<f64> {
        let other = match mode {
            Mode::Signal => Axis(1),
            Mode::Idler => Axis(0),
        };
        self.amplitudes
            .map(|a| a.norm_sqr())
            .sum_axis(other)
            .to_vec()
    }

    /// |amplitude|^2 for every (signal, idler) index pair.
    pub fn joint_probabilities(&self) -> Array2<f64> {
        self.amplitudes.map(|a| a.norm_sqr())
    }
}

/// Uniform superposition `sum_k |k>_s |k>_i / sqrt(n)`.
pub fn entangled_state(n: usize) -> Result<TimeBinState> {
    if n < 2 {
        return Err(Error::TooFewSlots(n));
    }
    let amp = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    let mut amplitudes = Array2::zeros((n, n));
    for k in 0..n {
        amplitudes[(k, k)] = amp;
    }
    Ok(TimeBinState {
        n_slots: n,
        amplitudes,
        loss_weight: 0.0,
        normalized: true,
        signal_mzi: false,
        idler_mzi: false,
    })
}

/// Pass one mode through its 1-bit-delay interferometer, keeping the detected port.
pub fn apply_mzi(state: &TimeBinState, mode: Mode, phi: f64) -> Result<TimeBinState> {
    if state.has_mzi(mode) {
        return Err(Error::InterferometerAlreadyApplied(mode.name()));
    }
    let axis = mode.axis();
    let mut dim = state.amplitudes.raw_dim();
    dim[axis.index()] += 1;

    let delay = Complex64::from_polar(1.0, phi);
    let mut kept = Array2::<Complex64>::zeros(dim);
    let mut dropped = Array2::<Complex64>::zeros(dim);
    let len = state.amplitudes.len_of(axis);

    // Early path stays in slot k, late path moves to slot k + 1.
    kept.slice_axis_mut(axis, (0..len).into())
        .zip_mut_with(&state.amplitudes, |o, &a| *o += a * 0.5);
    kept.slice_axis_mut(axis, (1..len + 1).into())
        .zip_mut_with(&state.amplitudes, |o, &a| *o += a * delay * 0.5);
    dropped
        .slice_axis_mut(axis, (0..len).into())
        .zip_mut_with(&state.amplitudes, |o, &a| *o += a * 0.5);
    dropped
        .slice_axis_mut(axis, (1..len + 1).into())
        .zip_mut_with(&state.amplitudes, |o, &a| *o -= a * delay * 0.5);

    let lost: f64 = dropped.iter().map(|a| a.norm_sqr()).sum();
    let mut out = TimeBinState {
        n_slots: state.n_slots,
        amplitudes: kept,
        loss_weight: state.loss_weight + lost,
        normalized: state.normalized,
        signal_mzi: state.signal_mzi,
        idler_mzi: state.idler_mzi,
    };
    match mode {
        Mode::Signal => out.signal_mzi = true,
        Mode::Idler => out.idler_mzi = true,
    }
    Ok(out)
}

/// Probability that both photons are detected in the same output slot.
pub fn matched_coincidence_probability(state: &TimeBinState) -> Result<f64> {
    if !(state.signal_mzi && state.idler_mzi) {
        return Err(Error::InterferometersMissing);
    }
    Ok(state
        .amplitudes
        .diag()
        .iter()
        .map(|a| a.norm_sqr())
        .sum())
}

/// State after both interferometers.
pub fn analyzed_state(n: usize, phases: PhasePair) -> Result<TimeBinState> {
    let psi = entangled_state(n)?;
    let psi = apply_mzi(&psi, Mode::Signal, phases.phi_s)?;
    apply_mzi(&psi, Mode::Idler, phases.phi_i)
}

/// Matched-slot coincidence probability of the full chain, including the
/// first and last output slots where no interference occurs.
pub fn fringe(n: usize, phases: PhasePair) -> Result<f64> {
    matched_coincidence_probability(&analyzed_state(n, phases)?)
}

/// Two-photon visibility of an n-slot train: `(n - 1) / n`.
pub fn ideal_visibility(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::TooFewSlots(n));
    }
    Ok((n as f64 - 1.0) / n as f64)
}

/// Matched-slot amplitudes of the analyzed state, first slot to last.
pub fn matched_amplitudes(state: &TimeBinState) -> Vec<Complex64> {
    let d = state.amplitudes.nrows().min(state.amplitudes.ncols());
    state.amplitudes.slice(s![..d, ..d]).diag().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    /// Independent route: expand the analyzed state term by term from the
    /// four path combinations of each input slot k.
    fn brute_force_matched(n: usize, phases: PhasePair) -> f64 {
        let mut amps = vec![Complex64::new(0.0, 0.0); n + 2];
        let norm = 1.0 / (n as f64).sqrt();
        for k in 1..=n {
            for (ds, dsi) in [(0usize, 0.0), (1, phases.phi_s)] {
                for (di, dii) in [(0usize, 0.0), (1, phases.phi_i)] {
                    if k + ds == k + di {
                        amps[k + ds] += Complex64::from_polar(norm / 4.0, dsi + dii);
                    }
                }
            }
        }
        amps.iter().map(|a| a.norm_sqr()).sum()
    }

    #[test]
    fn entangled_state_is_uniform_diagonal() {
        let psi = entangled_state(2).unwrap();
        assert_relative_eq!(psi.amplitude(1, 1).re, FRAC_1_SQRT_2);
        assert_relative_eq!(psi.amplitude(2, 2).re, FRAC_1_SQRT_2);
        assert_eq!(psi.amplitude(1, 2), Complex64::new(0.0, 0.0));

        let psi = entangled_state(5).unwrap();
        for j in 1..=5 {
            for k in 1..=5 {
                let p = psi.amplitude(j, k).norm_sqr();
                if j == k {
                    assert_relative_eq!(p, 0.2, max_relative = 1e-14);
                } else {
                    assert_eq!(p, 0.0);
                }
            }
        }
        assert!(psi.is_normalized());
        assert_eq!(entangled_state(1), Err(Error::TooFewSlots(1)));
    }

    #[test]
    fn single_slot_through_interferometer() {
        // |1>_s |1>_i of a 2-slot state, looking only at the signal slots.
        let mut psi = entangled_state(2).unwrap();
        psi.amplitudes[(1, 1)] = Complex64::new(0.0, 0.0);
        psi.amplitudes[(0, 0)] = Complex64::new(1.0, 0.0);

        let out = apply_mzi(&psi, Mode::Signal, 0.0).unwrap();
        assert_relative_eq!(out.amplitude(1, 1).re, 0.5);
        assert_relative_eq!(out.amplitude(2, 1).re, 0.5);
        assert_relative_eq!(out.loss_weight(), 0.5, max_relative = 1e-15);

        let out = apply_mzi(&psi, Mode::Signal, PI).unwrap();
        assert_relative_eq!(out.amplitude(1, 1).re, 0.5);
        assert_relative_eq!(out.amplitude(2, 1).re, -0.5, epsilon = 1e-15);
        assert!(out.amplitude(2, 1).im.abs() < 1e-15);
    }

    #[test]
    fn double_application_rejected() {
        let psi = entangled_state(3).unwrap();
        let once = apply_mzi(&psi, Mode::Idler, 0.3).unwrap();
        assert_eq!(
            apply_mzi(&once, Mode::Idler, 0.3),
            Err(Error::InterferometerAlreadyApplied("idler"))
        );
        assert_eq!(
            matched_coincidence_probability(&once),
            Err(Error::InterferometersMissing)
        );
    }

    #[test]
    fn two_slot_matched_amplitudes() {
        let out = analyzed_state(2, PhasePair::new(0.0, 0.0)).unwrap();
        assert_eq!(out.amplitudes().dim(), (3, 3));
        let unit = 1.0 / (4.0 * 2f64.sqrt());
        let m = matched_amplitudes(&out);
        assert_relative_eq!(m[0].re, unit, max_relative = 1e-14);
        assert_relative_eq!(m[1].re, 2.0 * unit, max_relative = 1e-14);
        assert_relative_eq!(m[2].re, unit, max_relative = 1e-14);
    }

    #[test]
    fn two_slot_matched_probability() {
        let p0 = fringe(2, PhasePair::new(0.0, 0.0)).unwrap();
        let pi = fringe(2, PhasePair::new(PI, 0.0)).unwrap();
        assert_relative_eq!(p0, 0.1875, max_relative = 1e-14);
        assert_relative_eq!(pi, 0.0625, max_relative = 1e-12);
        assert_relative_eq!(p0 / pi, 3.0, max_relative = 1e-12);
        assert_relative_eq!(
            (p0 - pi) / (p0 + pi),
            ideal_visibility(2).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn probability_is_conserved_per_interferometer() {
        let psi = entangled_state(7).unwrap();
        let s = apply_mzi(&psi, Mode::Signal, 1.1).unwrap();
        assert!((s.norm_sqr() + s.loss_weight() - psi.norm_sqr()).abs() < 1e-12);
        let si = apply_mzi(&s, Mode::Idler, -0.4).unwrap();
        assert!((si.norm_sqr() + si.loss_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_and_brute_force_agree() {
        for n in 2..=64 {
            for step in 0..100 {
                let theta = TAU * step as f64 / 100.0;
                let phases = PhasePair::new(theta * 0.3, theta * 0.7);
                let p = fringe(n, phases).unwrap();
                let closed = 2.0 + 2.0 * (n as f64 - 1.0) * (1.0 + theta.cos());
                assert!((16.0 * n as f64 * p - closed).abs() < 1e-12, "n={n} theta={theta}");
                assert!((p - brute_force_matched(n, phases)).abs() < 1e-14);
                assert!((0.0..=0.25).contains(&p));
            }
        }
    }

    #[test]
    fn extremes_at_zero_and_pi() {
        for n in [2, 3, 10, 33] {
            let max = fringe(n, PhasePair::new(0.0, 0.0)).unwrap();
            let min = fringe(n, PhasePair::new(PI, 0.0)).unwrap();
            for step in 0..64 {
                let theta = TAU * step as f64 / 64.0;
                let p = fringe(n, PhasePair::new(theta, 0.0)).unwrap();
                assert!(p <= max + 1e-15 && p >= min - 1e-15);
            }
            assert_relative_eq!(
                (max - min) / (max + min),
                ideal_visibility(n).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn marginal_is_phase_independent() {
        let a = apply_mzi(&entangled_state(4).unwrap(), Mode::Signal, 0.0).unwrap();
        let b = apply_mzi(&entangled_state(4).unwrap(), Mode::Signal, 2.0).unwrap();
        let ma = a.marginal(Mode::Signal);
        let mb = b.marginal(Mode::Signal);
        assert_eq!(ma.len(), 5);
        for (x, y) in ma.iter().zip(&mb) {
            assert_relative_eq!(x, y, max_relative = 1e-14);
        }
        assert_relative_eq!(ma[0], 1.0 / 16.0, max_relative = 1e-14);
        assert_relative_eq!(ma[2], 1.0 / 8.0, max_relative = 1e-14);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn depends_only_on_phase_sum(n in 2usize..20, s in -10.0..10.0f64, i in -10.0..10.0f64, shift in -5.0..5.0f64) {
                let a = fringe(n, PhasePair::new(s, i)).unwrap();
                let b = fringe(n, PhasePair::new(s + shift, i - shift)).unwrap();
                prop_assert!((a - b).abs() < 1e-14);
            }

            #[test]
            fn periodic_in_two_pi(n in 2usize..20, theta in 0.0..TAU) {
                let reduced = PhasePair::new(theta, 0.0).reduced();
                let a = fringe(n, reduced).unwrap();
                let b = fringe(n, PhasePair::new(theta + TAU, 0.0).reduced()).unwrap();
                prop_assert!((a - b).abs() < 1e-14);
            }
        }
    }
}
