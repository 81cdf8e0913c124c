//! Config loading and CSV/JSON file formats.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use sfwm_core::config::{validate, ExperimentConfig};
use sfwm_core::fit::ScalingData;

/// Config failed its invariants; each entry names the offending field.
#[derive(Debug)]
pub struct ConfigViolations(pub Vec<String>);

impl std::fmt::Display for ConfigViolations {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for v in &self.0 {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigViolations {}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).context("parsing config JSON")?;
    let violations = validate(&cfg);
    if !violations.is_empty() {
        return Err(ConfigViolations(violations.iter().map(|v| v.to_string()).collect()).into());
    }
    Ok(cfg)
}

/// Load and validate a config; `None` gives the built-in operating point.
pub fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        None => Ok(sfwm_core::config::default_config()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_config(&text).with_context(|| format!("config {}", p.display()))
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Header plus numeric rows, with columns located by name.
struct Table {
    columns: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let columns: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if columns.iter().all(|c| c.is_empty()) {
            bail!("{}: empty CSV (no header row)", path.display());
        }
        let rows = r.records().collect::<std::result::Result<Vec<_>, _>>()?;
        if rows.is_empty() {
            bail!("{}: CSV has a header but no data rows", path.display());
        }
        Ok(Self { columns, rows })
    }

    fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| anyhow!("missing column '{name}' (found: {})", self.columns.join(",")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let cell = row.get(idx).unwrap_or("");
                cell.parse::<f64>()
                    .map_err(|_| anyhow!("row {}, column '{name}': not a number: {cell:?}", i + 1))
            })
            .collect()
    }
}

pub const SCALING_COLUMNS: [&str; 4] = ["power", "mu_c", "mu_n_s", "mu_n_i"];
pub const FRINGE_COLUMNS: [&str; 2] = ["phi_s", "coincidences"];

/// Columns `power,mu_c,mu_n_s,mu_n_i`.
pub fn read_scaling_csv(path: &Path) -> Result<ScalingData> {
    let t = Table::read(path)?;
    let power = t.column("power")?;
    let zip = |ys: Vec<f64>| power.iter().copied().zip(ys).collect::<Vec<_>>();
    Ok(ScalingData {
        correlated: zip(t.column("mu_c")?),
        noise_signal: zip(t.column("mu_n_s")?),
        noise_idler: zip(t.column("mu_n_i")?),
    })
}

/// Columns `phi_s,coincidences`.
pub fn read_fringe_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let t = Table::read(path)?;
    Ok(t.column("phi_s")?.into_iter().zip(t.column("coincidences")?).collect())
}

/// Radians, or the tokens `pi`, `pi/<k>`, `<x>*pi`.
pub fn parse_phase(s: &str) -> Result<f64> {
    use std::f64::consts::PI;
    let t = s.trim().to_ascii_lowercase();
    if t == "pi" {
        return Ok(PI);
    }
    if let Some(d) = t.strip_prefix("pi/") {
        let d: f64 = d.parse().with_context(|| format!("bad phase {s:?}"))?;
        return Ok(PI / d);
    }
    if let Some(m) = t.strip_suffix("*pi") {
        let m: f64 = m.parse().with_context(|| format!("bad phase {s:?}"))?;
        return Ok(m * PI);
    }
    t.parse::<f64>().with_context(|| format!("bad phase {s:?} (radians, 'pi' or 'pi/2')"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn phase_tokens() {
        assert_eq!(parse_phase("0").unwrap(), 0.0);
        assert_eq!(parse_phase("pi/2").unwrap(), FRAC_PI_2);
        assert_eq!(parse_phase("PI").unwrap(), PI);
        assert_eq!(parse_phase("1.5*pi").unwrap(), 1.5 * PI);
        assert_eq!(parse_phase("0.25").unwrap(), 0.25);
        assert!(parse_phase("90deg").is_err());
    }

    #[test]
    fn config_violations_are_listed() {
        let mut cfg = sfwm_core::config::default_config();
        cfg.idler.detector_efficiency = 1.5;
        cfg.coherence_slots = 1;
        let err = parse_config(&serde_json::to_string(&cfg).unwrap()).unwrap_err();
        let v = err.downcast_ref::<ConfigViolations>().unwrap();
        assert_eq!(v.0, ["idler: detector_efficiency out of [0,1]", "config: coherence_slots < 2"]);
    }
}
