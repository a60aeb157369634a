//! Structured config file (TOML) with command-line flag overrides.
//!
//! Every value a subcommand needs can come from the config file; flags win
//! whenever both are given. Reproduction recipes ship as config files in
//! `configs/`.

use std::path::Path;

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub hamiltonian: HamiltonianSection,
    #[serde(default)]
    pub thermo: ThermoSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub output: OutputSection,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianSection {
    pub u: Option<f64>,
    pub mu: Option<f64>,
    pub t: Option<f64>,
    pub n: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoSection {
    pub beta: Option<f64>,
    pub grand_shift: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub mu_min: Option<f64>,
    pub mu_max: Option<f64>,
    pub mu_points: Option<usize>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub t_points: Option<usize>,
    pub threshold: Option<f64>,
    pub level: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub u_min: Option<f64>,
    pub u_max: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    pub tau: Option<f64>,
    pub theta: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Flag wins, then config, then the built-in default.
pub fn pick<T: Copy>(flag: Option<T>, config: Option<T>, default: T) -> T {
    flag.or(config).unwrap_or(default)
}

/// Evenly spaced ascending axis with `points >= 1` samples.
pub fn linspace(min: f64, max: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if points == 0 {
        return Err(CliError::Usage("axis needs at least one point".into()));
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    if !min.is_finite() || !max.is_finite() || max <= min {
        return Err(CliError::Usage(format!(
            "axis must be ascending, got [{min}, {max}]"
        )));
    }
    let step = (max - min) / (points - 1) as f64;
    Ok((0..points).map(|i| min + step * i as f64).collect())
}
