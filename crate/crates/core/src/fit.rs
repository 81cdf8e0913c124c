//! Estimation on measured or simulated series: power-scaling coefficients,
//! sinusoidal fringe visibility and CAR-versus-mu curves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{car_closed_form, pump_power_for_mu, symmetrized_channel};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::montecarlo::{estimate_car, sampling::derive_seed, simulate_car_run};

/// Least-squares fit of `y = k x` (no intercept).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProportionalFit {
    pub coefficient: f64,
    pub std_error: f64,
    pub r_squared: f64,
}

/// Fit of `y = k x`. R^2 is taken against the centered total sum of squares so
/// it can be compared across models fitted to the same data.
pub fn fit_proportional(x: &[f64], y: &[f64]) -> Result<ProportionalFit> {
    if x.len() != y.len() {
        return Err(Error::FitInput("x and y lengths differ".into()));
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if !(sxx > 0.0) {
        return Err(Error::FitInput("degenerate design: all regressors zero".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let k = sxy / sxx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - k * a).powi(2)).sum();
    let n = x.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let tss: f64 = y.iter().map(|b| (b - mean).powi(2)).sum();
    let dof = (x.len() - 1).max(1) as f64;
    Ok(ProportionalFit {
        coefficient: k,
        std_error: (rss / dof / sxx).sqrt(),
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
    })
}

/// Pair and noise means measured at a set of pump powers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScalingData {
    /// (peak power W, mu_c)
    pub correlated: Vec<(f64, f64)>,
    /// (peak power W, mu_n) for the signal channel
    pub noise_signal: Vec<(f64, f64)>,
    pub noise_idler: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub a_hat: f64,
    pub b_hat_s: f64,
    pub b_hat_i: f64,
    /// Variances of the three coefficients; the series are fitted
    /// independently, so cross-covariances are zero.
    pub var_a: f64,
    pub var_b_s: f64,
    pub var_b_i: f64,
    pub r_squared_a: f64,
    pub r_squared_b_s: f64,
    pub r_squared_b_i: f64,
}

fn check_series(name: &str, pts: &[(f64, f64)]) -> Result<()> {
    if pts.len() < 3 {
        return Err(Error::FitInput(format!("{name}: need at least 3 points, got {}", pts.len())));
    }
    if pts.iter().any(|&(p, _)| !(p > 0.0) || !p.is_finite()) {
        return Err(Error::FitInput(format!("{name}: powers must be positive")));
    }
    let first = pts[0].0;
    if pts.iter().all(|&(p, _)| p == first) {
        return Err(Error::FitInput(format!("{name}: degenerate design, all powers equal")));
    }
    Ok(())
}

/// Fit `mu_c = a p^2 T` and `mu_n = b p T` per channel, with `T = dF dT`.
pub fn fit_scaling(data: &ScalingData, time_bandwidth: f64) -> Result<ScalingFit> {
    check_series("correlated", &data.correlated)?;
    check_series("noise_signal", &data.noise_signal)?;
    check_series("noise_idler", &data.noise_idler)?;

    let series = |pts: &[(f64, f64)], power: i32| {
        let x: Vec<f64> = pts.iter().map(|&(p, _)| p.powi(power) * time_bandwidth).collect();
        let y: Vec<f64> = pts.iter().map(|&(_, m)| m).collect();
        fit_proportional(&x, &y)
    };
    let a = series(&data.correlated, 2)?;
    let bs = series(&data.noise_signal, 1)?;
    let bi = series(&data.noise_idler, 1)?;
    Ok(ScalingFit {
        a_hat: a.coefficient,
        b_hat_s: bs.coefficient,
        b_hat_i: bi.coefficient,
        var_a: a.std_error.powi(2),
        var_b_s: bs.std_error.powi(2),
        var_b_i: bi.std_error.powi(2),
        r_squared_a: a.r_squared,
        r_squared_b_s: bs.r_squared,
        r_squared_b_i: bi.r_squared,
    })
}

/// Sinusoid `counts = A (1 + V cos(phi + phi0))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    /// Visibility, clamped to [0, 1].
    pub visibility: f64,
    pub raw_visibility: f64,
    pub clamped: bool,
    pub phase_offset: f64,
    pub mean_level: f64,
    pub visibility_error: f64,
    /// Weighted residual sum of squares.
    pub residual_norm: f64,
}

fn solve3(m: [[f64; 3]; 3], v: [f64; 3]) -> Option<([f64; 3], [[f64; 3]; 3])> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let scale: f64 = m.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    if !(det.abs() > 1e-14 * scale.powi(3)) {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            *x = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    let mut sol = [0.0; 3];
    for (i, s) in sol.iter_mut().enumerate() {
        *s = (0..3).map(|j| inv[i][j] * v[j]).sum();
    }
    Some((sol, inv))
}

/// Weighted linear least squares on `A + B cos(phi) + C sin(phi)` with
/// Poisson weights `1 / max(counts, 1)`.
pub fn fit_fringe(samples: &[(f64, f64)]) -> Result<FringeFit> {
    if samples.len() < 4 {
        return Err(Error::FitInput(format!("need at least 4 phase samples, got {}", samples.len())));
    }
    if samples.iter().any(|&(p, c)| !p.is_finite() || !(c >= 0.0)) {
        return Err(Error::FitInput("phases must be finite and counts non-negative".into()));
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &(p, _)| (l.min(p), h.max(p)));
    if !(hi - lo > std::f64::consts::PI) {
        return Err(Error::FitInput("phase samples must span more than pi".into()));
    }

    let mut normal = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for &(phi, counts) in samples {
        let w = 1.0 / counts.max(1.0);
        let basis = [1.0, phi.cos(), phi.sin()];
        for i in 0..3 {
            rhs[i] += w * basis[i] * counts;
            for j in 0..3 {
                normal[i][j] += w * basis[i] * basis[j];
            }
        }
    }
    let ([a, b, c], cov) =
        solve3(normal, rhs).ok_or_else(|| Error::FitInput("phase samples do not resolve a sinusoid".into()))?;
    if !(a > 0.0) {
        return Err(Error::FitInput("fitted mean level is not positive (no signal)".into()));
    }

    let amp = b.hypot(c);
    let v = amp / a;
    let grad = if amp > 0.0 {
        [-v / a, b / (a * amp), c / (a * amp)]
    } else {
        [0.0, 0.0, 0.0]
    };
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var += grad[i] * cov[i][j] * grad[j];
        }
    }
    if amp == 0.0 {
        var = (cov[1][1] + cov[2][2]) / (a * a);
    }

    let residual_norm = samples
        .iter()
        .map(|&(phi, counts)| {
            let model = a + b * phi.cos() + c * phi.sin();
            (counts - model).powi(2) / counts.max(1.0)
        })
        .sum();

    Ok(FringeFit {
        visibility: v.clamp(0.0, 1.0),
        raw_visibility: v,
        clamped: v > 1.0,
        phase_offset: (-c).atan2(b),
        mean_level: a,
        visibility_error: var.max(0.0).sqrt(),
        residual_norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarCurveRow {
    pub mu: f64,
    pub peak_power: f64,
    pub analytic_car: f64,
    pub simulated_car: f64,
    pub simulated_stderr: f64,
}

/// CAR versus mean photon number per pulse, analytic and simulated side by
/// side. Row `k` simulates with seed `derive_seed(cfg.seed, k)`.
pub fn car_curve(cfg: &ExperimentConfig, mu_values: &[f64]) -> Result<Vec<CarCurveRow>> {
    if mu_values.is_empty() {
        return Err(Error::FitInput("no mu values".into()));
    }
    if mu_values.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::FitInput("mu values must be positive".into()));
    }
    if mu_values.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::FitInput("mu values must be sorted".into()));
    }
    let (alpha, d) = symmetrized_channel(cfg, false);
    mu_values
        .par_iter()
        .enumerate()
        .map(|(k, &mu)| {
            let mut run = *cfg;
            run.source.peak_power = pump_power_for_mu(mu, &cfg.source)?;
            run.seed = derive_seed(cfg.seed, k as u64);
            run.interferometers_present = false;
            let analytic_car = car_closed_form(mu, &cfg.source, alpha, d)?;
            let est = estimate_car(&simulate_car_run(&run)?)?;
            Ok(CarCurveRow {
                mu,
                peak_power: run.source.peak_power,
                analytic_car,
                simulated_car: est.car,
                simulated_stderr: est.stderr,
            })
        })
        .collect()
}
