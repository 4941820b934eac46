use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{ObservableError, ObservableResult};

/// Bumped whenever CSV columns or sidecar fields change meaning.
pub const SERIES_SCHEMA_VERSION: u32 = 1;

/// Reliability of an MPS-sourced sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrustFlag {
    pub trusted: bool,
    /// Largest bond entropy (bits) at this time.
    pub max_bond_entropy: f64,
    pub truncation_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetadata {
    pub schema_version: u32,
    pub engine: String,
    /// Config fragments, numerical parameters and conventions.
    #[serde(default)]
    pub parameters: IndexMap<String, serde_json::Value>,
    /// One flag per time for MPS engines; empty for exact engines.
    #[serde(default)]
    pub trust: Vec<TrustFlag>,
}

impl SeriesMetadata {
    pub fn new(engine: impl Into<String>) -> Self {
        Self { schema_version: SERIES_SCHEMA_VERSION, engine: engine.into(), parameters: IndexMap::new(), trust: Vec::new() }
    }

    pub fn with_parameter(mut self, key: impl Into<String>, value: impl Serialize) -> Self {
        self.parameters.insert(key.into(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
        self
    }

    pub fn requires_trust(&self) -> bool {
        matches!(self.engine.as_str(), "tebd" | "itebd")
    }
}

/// Time-stamped named measurements.
///
/// Channel order is fixed by the first sample and preserved in the CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSeries {
    times: Vec<f64>,
    channels: IndexMap<String, Vec<f64>>,
    pub metadata: SeriesMetadata,
}

impl ObservableSeries {
    pub fn new(metadata: SeriesMetadata) -> Self {
        Self { times: Vec::new(), channels: IndexMap::new(), metadata }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn channel_names(&self) -> impl Iterator<Item = &str> {
        self.channels.keys().map(String::as_str)
    }

    pub fn channel(&self, name: &str) -> ObservableResult<&[f64]> {
        self.channels.get(name).map(Vec::as_slice).ok_or_else(|| ObservableError::MissingChannel(name.to_string()))
    }

    pub fn has_channel(&self, name: &str) -> bool {
        self.channels.contains_key(name)
    }

    /// Appends one sample. The first call fixes the channel set.
    pub fn push<S: AsRef<str>>(&mut self, time: f64, values: &[(S, f64)]) -> ObservableResult<()> {
        if let Some(&last) = self.times.last() {
            if time <= last {
                return Err(ObservableError::MalformedSeries(format!("time {time} does not follow {last}")));
            }
        }
        if self.times.is_empty() && self.channels.is_empty() {
            for (name, _) in values {
                if self.channels.insert(name.as_ref().to_string(), Vec::new()).is_some() {
                    return Err(ObservableError::MalformedSeries(format!("duplicate channel `{}`", name.as_ref())));
                }
            }
        }
        if values.len() != self.channels.len() {
            return Err(ObservableError::MalformedSeries(format!(
                "sample has {} channels, series has {}",
                values.len(),
                self.channels.len()
            )));
        }
        for (name, _) in values {
            if !self.channels.contains_key(name.as_ref()) {
                return Err(ObservableError::MissingChannel(name.as_ref().to_string()));
            }
        }
        for (name, v) in values {
            self.channels[name.as_ref()].push(*v);
        }
        self.times.push(time);
        Ok(())
    }

    pub fn validate(&self) -> ObservableResult<()> {
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ObservableError::MalformedSeries("times are not strictly increasing".into()));
        }
        if let Some((name, _)) = self.channels.iter().find(|(_, v)| v.len() != self.times.len()) {
            return Err(ObservableError::MalformedSeries(format!("channel `{name}` is misaligned")));
        }
        if self.metadata.requires_trust() && self.metadata.trust.len() != self.times.len() {
            return Err(ObservableError::MalformedSeries("MPS series without per-sample trust flags".into()));
        }
        Ok(())
    }

    /// Writes the CSV (`time` first, one column per channel). Values use the
    /// shortest round-trip representation, so output is byte-stable.
    pub fn write_csv(&self, path: &Path) -> ObservableResult<()> {
        self.validate()?;
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        let mut header = vec!["time".to_string()];
        header.extend(self.channels.keys().cloned());
        w.write_record(&header)?;
        for (k, t) in self.times.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(self.channels.values().map(|c| c[k].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_sidecar(&self, path: &Path) -> ObservableResult<()> {
        let mut f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut f, &self.metadata)?;
        writeln!(f)?;
        f.flush()?;
        Ok(())
    }

    /// Writes `<stem>.csv` and `<stem>.json` next to each other.
    pub fn save(&self, csv_path: &Path) -> ObservableResult<()> {
        self.write_csv(csv_path)?;
        self.write_sidecar(&sidecar_path(csv_path))
    }

    /// Reads a CSV and, when present, its JSON sidecar.
    pub fn load(csv_path: &Path) -> ObservableResult<Self> {
        let sidecar = sidecar_path(csv_path);
        let metadata = if sidecar.exists() {
            serde_json::from_reader(File::open(&sidecar)?)?
        } else {
            SeriesMetadata::new("unknown")
        };
        let mut reader = csv::Reader::from_path(csv_path)?;
        let header = reader.headers()?.clone();
        if header.get(0) != Some("time") {
            return Err(ObservableError::MalformedSeries("first column must be `time`".into()));
        }
        let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut series = Self::new(metadata);
        for record in reader.records() {
            let record = record?;
            let parsed = record
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| ObservableError::MalformedSeries(format!("`{s}`: {e}"))))
                .collect::<ObservableResult<Vec<f64>>>()?;
            let values: Vec<(&str, f64)> = names.iter().map(String::as_str).zip(parsed[1..].iter().copied()).collect();
            series.push(parsed[0], &values)?;
        }
        if series.is_empty() {
            for name in names {
                series.channels.insert(name, Vec::new());
            }
        }
        Ok(series)
    }

    /// Linear interpolation of a channel at `t` inside the sampled range.
    pub fn interpolate(&self, name: &str, t: f64) -> ObservableResult<f64> {
        let values = self.channel(name)?;
        interpolate(&self.times, values, t).ok_or(ObservableError::WindowOutsideSeries(t, t))
    }
}

pub(crate) fn interpolate(times: &[f64], values: &[f64], t: f64) -> Option<f64> {
    let (&first, &last) = (times.first()?, times.last()?);
    let slack = 1e-9 * (1.0 + last.abs());
    if t < first - slack || t > last + slack {
        return None;
    }
    let k = times.partition_point(|&x| x < t);
    if k == 0 {
        return Some(values[0]);
    }
    if k == times.len() {
        return Some(values[k - 1]);
    }
    let (t0, t1) = (times[k - 1], times[k]);
    let w = (t - t0) / (t1 - t0);
    Some(values[k - 1] * (1.0 - w) + values[k] * w)
}

fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}
