//! Run directories and parameter sweeps.
//!
//! A run directory holds
//!
//! - `series.csv`: `time` first, then one column per channel,
//! - `series.json`: the series metadata (schema version, parameters, trust flags),
//! - `manifest.json`: complete config echo, code version, status, diagnostics,
//! - `checkpoints/`: the final engine state, when the engine keeps one.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::apply_override;
use super::CliError;
use crate::observables::SERIES_SCHEMA_VERSION;
use crate::simulation::{simulate, Diagnostics, EngineState, RunConfig, SimError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub code_version: String,
    pub status: RunStatus,
    pub error: Option<String>,
    pub config: RunConfig,
    pub samples: usize,
    pub channels: Vec<String>,
    /// Last time of the leading run of trusted samples (MPS engines).
    pub trusted_until: Option<f64>,
    pub untrusted_samples: usize,
    pub diagnostics: Diagnostics,
    pub checkpoint: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// Stopped on a numerical-budget failure; the series is truncated.
    Failed,
}

fn write_checkpoint(state: &EngineState, dir: &Path) -> Result<Option<String>, CliError> {
    if !matches!(state, EngineState::Analytic) {
        fs::create_dir_all(dir)?;
    }
    let name = match state {
        EngineState::Ed(psi) => {
            psi.dump(&dir.join("final.svec"))?;
            "final.svec"
        }
        EngineState::Mps(m) => {
            m.save(&dir.join("final.slmp"))?;
            "final.slmp"
        }
        EngineState::Vbs(v) => {
            fs::write(dir.join("final_vbs.json"), serde_json::to_vec_pretty(&v.bonds())?)?;
            "final_vbs.json"
        }
        EngineState::Analytic => return Ok(None),
    };
    Ok(Some(format!("checkpoints/{name}")))
}

/// Executes a configuration into `dir`. A numerical failure still writes
/// the partial series and the manifest before returning the error.
pub fn run_to_dir(config: &RunConfig, dir: &Path) -> Result<Manifest, CliError> {
    let output = simulate(config)?;
    let checkpoints = dir.join("checkpoints");
    fs::create_dir_all(dir)?;
    output.series.save(&dir.join("series.csv"))?;
    let checkpoint = write_checkpoint(&output.state, &checkpoints)?;
    let trust = &output.series.metadata.trust;
    let manifest = Manifest {
        schema_version: SERIES_SCHEMA_VERSION,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        status: if output.failure.is_some() { RunStatus::Failed } else { RunStatus::Completed },
        error: output.failure.as_ref().map(ToString::to_string),
        config: config.clone(),
        samples: output.series.len(),
        channels: output.series.channel_names().map(str::to_string).collect(),
        trusted_until: output.diagnostics.trusted_until,
        untrusted_samples: trust.iter().filter(|f| !f.trusted).count(),
        diagnostics: output.diagnostics.clone(),
        checkpoint,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    match output.failure {
        Some(e) => Err(e.into()),
        None => Ok(manifest),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub value: String,
    pub directory: PathBuf,
    pub status: String,
    pub exit_code: i32,
}

/// Runs one configuration per value of `param`, concurrently, each in
/// `base/<param>=<value>`. Writes `sweep.json` into `base`.
pub fn sweep(base_toml: &toml::Table, param: &str, values: &[String], base: &Path) -> Result<Vec<SweepEntry>, CliError> {
    let configs = values
        .iter()
        .map(|v| {
            let mut table = base_toml.clone();
            apply_override(&mut table, &format!("{param}={v}"))?;
            let config: RunConfig = toml::Value::Table(table)
                .try_into()
                .map_err(|e: toml::de::Error| CliError::Config { field: param.into(), message: e.message().into() })?;
            config.validate()?;
            Ok((v.clone(), config))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    fs::create_dir_all(base)?;
    let entries: Vec<SweepEntry> = configs
        .par_iter()
        .map(|(value, config)| {
            let dir = base.join(format!("{param}={value}"));
            let result = run_to_dir(config, &dir);
            let (status, exit_code) = match &result {
                Ok(_) => ("completed".to_string(), 0),
                Err(e) => (e.to_string(), e.exit_code()),
            };
            SweepEntry { value: value.clone(), directory: dir, status, exit_code }
        })
        .collect();
    fs::write(base.join("sweep.json"), serde_json::to_vec_pretty(&entries)?)?;
    Ok(entries)
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config { field, message } => CliError::Config { field, message },
            other => CliError::Simulation(other),
        }
    }
}
