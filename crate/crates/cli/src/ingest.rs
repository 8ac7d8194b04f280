//! Dataset resolution: embedded series by name or observation CSV from disk
//! (one value per line, optional header), pooled and partitioned into
//! subgroups in file order.

use std::fs;
use std::path::Path;

use tbeta_chart::data;
use tbeta_chart::estimate::SubgroupData;

use crate::{CliError, EXIT_CONFIG, EXIT_DATA};

/// Where observations come from and how they partition into subgroups.
pub struct DatasetSpec {
    pub source: String,
    pub subgroup_size: usize,
    /// None means "source default": embedded monthly series drop their first
    /// observation (the reference months fit the remaining thirty), files
    /// keep everything.
    pub drop_first: Option<bool>,
    pub support: (f64, f64),
}

impl DatasetSpec {
    pub fn is_embedded(&self) -> bool {
        data::embedded(&self.source).is_some()
    }

    /// Loads, applies the drop-first convention, and partitions.
    pub fn load(&self) -> Result<SubgroupData, CliError> {
        let mut obs = self.raw_observations()?;
        let drop_first = self.drop_first.unwrap_or_else(|| self.is_embedded());
        if drop_first {
            if obs.is_empty() {
                return Err(CliError::new(EXIT_DATA, "cannot drop the first observation of an empty dataset"));
            }
            obs.remove(0);
        }
        let (a, b) = self.support;
        let bad: Vec<(usize, f64)> = obs
            .iter()
            .enumerate()
            .filter(|(_, x)| !(**x >= a && **x <= b))
            .map(|(i, x)| (i + 1, *x))
            .take(5)
            .collect();
        if !bad.is_empty() {
            return Err(CliError::new(
                EXIT_DATA,
                format!("observations outside support [{a}, {b}] (position, value): {bad:?}"),
            ));
        }
        SubgroupData::from_pooled(obs, self.subgroup_size)
            .map_err(|e| CliError::new(EXIT_DATA, e.to_string()))
    }

    fn raw_observations(&self) -> Result<Vec<f64>, CliError> {
        if let Some(series) = data::embedded(&self.source) {
            return Ok(series.to_vec());
        }
        let path = Path::new(&self.source);
        if !path.exists() {
            return Err(CliError::new(
                EXIT_CONFIG,
                format!(
                    "'{}' is neither an embedded dataset ({}) nor an existing file",
                    self.source,
                    data::EMBEDDED_NAMES.join(", ")
                ),
            ));
        }
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::new(EXIT_DATA, format!("reading {}: {e}", self.source)))?;
        parse_observation_csv(&text, &self.source)
    }
}

/// One observation per line; a single leading non-numeric line is treated as
/// a header. Parse failures report the offending line number.
pub fn parse_observation_csv(text: &str, name: &str) -> Result<Vec<f64>, CliError> {
    let mut obs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) => obs.push(v),
            Err(_) if lineno == 0 && obs.is_empty() => {} // header row
            Err(_) => {
                return Err(CliError::new(
                    EXIT_DATA,
                    format!("{name}:{}: cannot parse '{line}' as a number", lineno + 1),
                ))
            }
        }
    }
    if obs.is_empty() {
        return Err(CliError::new(
            EXIT_DATA,
            format!("{name}: no observations found"),
        ));
    }
    Ok(obs)
}

/// Parses `--support a,b`.
pub fn parse_support(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected two comma-separated numbers, e.g. 0.3,1".into());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| format!("bad lower bound '{}'", parts[0]))?;
    let b: f64 = parts[1].trim().parse().map_err(|_| format!("bad upper bound '{}'", parts[1]))?;
    Ok((a, b))
}

/// Parses `--shift d1,d2`.
pub fn parse_shift(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected two comma-separated shifts, e.g. 0,-0.3".into());
    }
    let d1: f64 = parts[0].trim().parse().map_err(|_| format!("bad shift '{}'", parts[0]))?;
    let d2: f64 = parts[1].trim().parse().map_err(|_| format!("bad shift '{}'", parts[1]))?;
    Ok((d1, d2))
}
