//! TOML run configurations with `--set path=value` overrides.

use std::path::Path;

use toml::{Table, Value};

use super::CliError;
use crate::simulation::RunConfig;

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => Value::String(raw.to_string()),
    }
}

/// Sets a dotted key, creating intermediate tables.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config { field: assignment.to_string(), message: "expected path=value".into() })?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config { field: path.to_string(), message: "empty key segment".into() });
    }
    let mut current = table;
    for (depth, key) in keys[..keys.len() - 1].iter().enumerate() {
        let entry = current.entry(key.to_string()).or_insert_with(|| Value::Table(Table::new()));
        current = entry.as_table_mut().ok_or_else(|| CliError::Config {
            field: keys[..=depth].join("."),
            message: "is not a table".into(),
        })?;
    }
    current.insert(keys[keys.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table: Table =
        text.parse().map_err(|e: toml::de::Error| CliError::Config { field: "<file>".into(), message: e.to_string() })?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let config: RunConfig = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config { field: "<config>".into(), message: e.message().to_string() })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config { field: path.display().to_string(), message: e.to_string() })?;
    parse_config(&text, overrides)
}

/// Normalized TOML of a configuration, complete with defaults.
pub fn to_toml(config: &RunConfig) -> String {
    toml::to_string(config).expect("configuration serializes")
}
