//! Command-line surface: `run`, `analyze`, `sweep`, `validate-config`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical-budget failure,
//! 1 anything else (I/O, malformed series).

mod analyze;
mod config;
mod run;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use analyze::{analyze, AnalyzeRequest};
pub use config::{apply_override, load_config, parse_config, to_toml};
pub use run::{run_to_dir, sweep, Manifest, RunStatus, SweepEntry};

use crate::ed::EdError;
use crate::mps::MpsError;
use crate::observables::ObservableError;
use crate::simulation::SimError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Simulation(SimError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{failed} sweep members failed")]
    Sweep { failed: usize, exit_code: i32 },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } => 2,
            Self::Simulation(e) if e.is_numerical() => 3,
            Self::Sweep { exit_code, .. } => *exit_code,
            _ => 1,
        }
    }
}

impl From<EdError> for CliError {
    fn from(e: EdError) -> Self {
        SimError::from(e).into()
    }
}

impl From<MpsError> for CliError {
    fn from(e: MpsError) -> Self {
        SimError::from(e).into()
    }
}

#[derive(Debug, Parser)]
#[command(name = "superlattice", version, about = "Spin dynamics in double-well superlattices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

fn parse_pair(raw: &str) -> Result<(f64, f64), String> {
    let (a, b) = raw.split_once(':').ok_or("expected LO:HI")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute a configuration and write a run directory.
    Run {
        config: PathBuf,
        /// Override a key, e.g. `--set numerics.chi_max=128`.
        #[arg(long = "set", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
        /// Defaults to `output_dir` from the configuration.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Compute derived quantities from a saved series.
    Analyze {
        series: PathBuf,
        #[arg(long, value_delimiter = ',')]
        channels: Vec<String>,
        /// Quasistationary window `T_RELAX:T_REC`.
        #[arg(long, value_parser = parse_pair)]
        average: Option<(f64, f64)>,
        /// Correlation-front threshold.
        #[arg(long)]
        front_epsilon: Option<f64>,
        /// Noise peak window `Q_LO:Q_HI`.
        #[arg(long, value_parser = parse_pair)]
        peak: Option<(f64, f64)>,
        /// Second series for a per-channel deviation report.
        #[arg(long)]
        compare: Option<PathBuf>,
        /// Infinite-chain series for the entropy deficit.
        #[arg(long)]
        entropy_reference: Option<PathBuf>,
        #[arg(long)]
        crossover_threshold: Option<f64>,
        /// Report path; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run one configuration per value of a key, concurrently.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long = "set", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Check a configuration and print its normalized form.
    ValidateConfig {
        config: PathBuf,
        #[arg(long = "set", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
    },
}

fn execute_inner(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, overrides, output_dir } => {
            let config = load_config(&config, &overrides)?;
            let dir = output_dir.unwrap_or_else(|| PathBuf::from(&config.output_dir));
            let manifest = run_to_dir(&config, &dir)?;
            log::info!("{} samples written to {}", manifest.samples, dir.display());
            if manifest.untrusted_samples > 0 {
                log::warn!("{} samples beyond the MPS reliability horizon", manifest.untrusted_samples);
            }
        }
        Command::Analyze {
            series,
            channels,
            average,
            front_epsilon,
            peak,
            compare,
            entropy_reference,
            crossover_threshold,
            output,
        } => {
            let request = AnalyzeRequest {
                series,
                channels,
                average_window: average,
                front_epsilon,
                peak_window: peak,
                compare,
                entropy_reference,
                crossover_threshold,
            };
            let text = serde_json::to_string_pretty(&analyze(&request)?)?;
            match output {
                Some(path) => std::fs::write(path, text)?,
                None => {
                    let mut out = std::io::stdout().lock();
                    if let Err(e) = writeln!(out, "{text}") {
                        if e.kind() != std::io::ErrorKind::BrokenPipe {
                            return Err(e.into());
                        }
                    }
                }
            }
        }
        Command::Sweep { config, param, values, overrides, output_dir } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| CliError::Config { field: config.display().to_string(), message: e.to_string() })?;
            let mut table: toml::Table = text
                .parse()
                .map_err(|e: toml::de::Error| CliError::Config { field: "<file>".into(), message: e.to_string() })?;
            for o in &overrides {
                apply_override(&mut table, o)?;
            }
            let base = match output_dir {
                Some(d) => d,
                None => PathBuf::from(table.get("output_dir").and_then(|v| v.as_str()).unwrap_or("sweep")),
            };
            let entries = sweep(&table, &param, &values, &base)?;
            let failed: Vec<&SweepEntry> = entries.iter().filter(|e| e.exit_code != 0).collect();
            for e in &failed {
                log::error!("{param}={}: {}", e.value, e.status);
            }
            if let Some(worst) = failed.iter().map(|e| e.exit_code).max() {
                return Err(CliError::Sweep { failed: failed.len(), exit_code: worst });
            }
        }
        Command::ValidateConfig { config, overrides } => {
            let config = load_config(&config, &overrides)?;
            print!("{}", to_toml(&config));
        }
    }
    Ok(())
}

/// Runs a parsed command line and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    match execute_inner(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
