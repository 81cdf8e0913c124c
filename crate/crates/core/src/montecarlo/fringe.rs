//! Joint detection outcomes of one entangled pair behind both interferometers.

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::error::{Error, Result};
use crate::timebin::{self, Mode, PhasePair};

/// Where the photons of one pair end up, as output-slot offsets `0..=n`
/// from the start of its coherence block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairOutcome {
    Both { signal: u32, idler: u32 },
    SignalOnly(u32),
    IdlerOnly(u32),
}

/// Distribution of detected outcomes for a pair spread over an `n`-slot block,
/// with channel efficiencies `alpha_s`, `alpha_i` applied after the
/// interferometers. The undetected outcome is left out; its complement is
/// [`OutcomeTable::detect_probability`].
#[derive(Debug, Clone)]
pub struct OutcomeTable {
    outcomes: Vec<PairOutcome>,
    probs: Vec<f64>,
    alias: WeightedAliasIndex<f64>,
    detect_probability: f64,
}

impl OutcomeTable {
    pub fn new(n: usize, phases: PhasePair, alpha_s: f64, alpha_i: f64) -> Result<Self> {
        let joint = timebin::analyzed_state(n, phases)?.joint_probabilities();
        let psi = timebin::entangled_state(n)?;
        let signal_marginal = timebin::apply_mzi(&psi, Mode::Signal, phases.phi_s)?.marginal(Mode::Signal);
        let idler_marginal = timebin::apply_mzi(&psi, Mode::Idler, phases.phi_i)?.marginal(Mode::Idler);

        let mut outcomes = Vec::new();
        let mut probs = Vec::new();
        for ((j, k), &p) in joint.indexed_iter() {
            if p > 0.0 {
                outcomes.push(PairOutcome::Both {
                    signal: j as u32,
                    idler: k as u32,
                });
                probs.push(alpha_s * alpha_i * p);
            }
        }
        let row_sums = joint.sum_axis(ndarray::Axis(1));
        let col_sums = joint.sum_axis(ndarray::Axis(0));
        for (j, (&m, &both)) in signal_marginal.iter().zip(row_sums.iter()).enumerate() {
            let p = alpha_s * (m - alpha_i * both);
            if p > 0.0 {
                outcomes.push(PairOutcome::SignalOnly(j as u32));
                probs.push(p);
            }
        }
        for (k, (&m, &both)) in idler_marginal.iter().zip(col_sums.iter()).enumerate() {
            let p = alpha_i * (m - alpha_s * both);
            if p > 0.0 {
                outcomes.push(PairOutcome::IdlerOnly(k as u32));
                probs.push(p);
            }
        }
        let detect_probability: f64 = probs.iter().sum();
        let alias = WeightedAliasIndex::new(probs.clone())
            .map_err(|e| Error::InsufficientStatistics(format!("no detectable pair outcome: {e}")))?;
        Ok(Self {
            outcomes,
            probs,
            alias,
            detect_probability,
        })
    }

    pub fn detect_probability(&self) -> f64 {
        self.detect_probability
    }

    pub fn iter(&self) -> impl Iterator<Item = (PairOutcome, f64)> + '_ {
        self.outcomes.iter().copied().zip(self.probs.iter().copied())
    }

    /// Draw one outcome, conditioned on at least one photon being detected.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PairOutcome {
        self.outcomes[self.alias.sample(rng)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn lossless_table_accounts_for_all_probability() {
        // With alpha = 1 each photon is detected half the time, so
        // P(any) = 1 - P(neither) where P(both) depends on the phase sum.
        for theta in [0.0, PI / 3.0, PI] {
            let n = 6;
            let t = OutcomeTable::new(n, PhasePair::new(theta, 0.0), 1.0, 1.0).unwrap();
            let both: f64 = t
                .iter()
                .filter(|(o, _)| matches!(o, PairOutcome::Both { .. }))
                .map(|(_, p)| p)
                .sum();
            let single_s: f64 = t
                .iter()
                .filter(|(o, _)| matches!(o, PairOutcome::SignalOnly(_)))
                .map(|(_, p)| p)
                .sum();
            assert!((both + single_s - 0.5).abs() < 1e-12);
            let matched: f64 = t
                .iter()
                .filter(|(o, _)| matches!(o, PairOutcome::Both { signal, idler } if signal == idler))
                .map(|(_, p)| p)
                .sum();
            let f = timebin::fringe(n, PhasePair::new(theta, 0.0)).unwrap();
            assert!((matched - f).abs() < 1e-14);
            // Neither port pattern is possible with lossless channels too.
            assert!(t.detect_probability() < 1.0);
        }
    }

    #[test]
    fn thinning_scales_both_detections() {
        let full = OutcomeTable::new(4, PhasePair::new(0.2, 0.1), 1.0, 1.0).unwrap();
        let lossy = OutcomeTable::new(4, PhasePair::new(0.2, 0.1), 0.1, 0.2).unwrap();
        let both = |t: &OutcomeTable| -> f64 {
            t.iter()
                .filter(|(o, _)| matches!(o, PairOutcome::Both { .. }))
                .map(|(_, p)| p)
                .sum()
        };
        assert!((both(&lossy) - 0.02 * both(&full)).abs() < 1e-14);
    }
}
