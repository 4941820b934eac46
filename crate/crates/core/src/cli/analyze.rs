//! Derived quantities from saved series.

use std::path::PathBuf;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::CliError;
use crate::observables::{
    crossover_time, entropy_deficit, horizon_front, locate_peak, max_abs_deviation, quasistationary_average,
    ObservableError, ObservableSeries,
};

/// What to compute; every field is echoed into the report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeRequest {
    pub series: PathBuf,
    /// Channels for averaging; empty means all.
    pub channels: Vec<String>,
    /// `(t_relax, t_rec)`.
    pub average_window: Option<(f64, f64)>,
    /// Threshold `ε` of the correlation front, applied to `Gpm_l`.
    pub front_epsilon: Option<f64>,
    /// `(q_lo, q_hi)` for the noise peak at the last sample.
    pub peak_window: Option<(f64, f64)>,
    pub compare: Option<PathBuf>,
    /// Infinite-chain series with `S_even`/`S_odd` for the entropy deficit.
    pub entropy_reference: Option<PathBuf>,
    pub crossover_threshold: Option<f64>,
}

fn numbered(series: &ObservableSeries, prefix: &str) -> Vec<(usize, String)> {
    let mut found: Vec<(usize, String)> = series
        .channel_names()
        .filter_map(|n| n.strip_prefix(prefix)?.strip_prefix('_')?.parse().ok().map(|k| (k, n.to_string())))
        .collect();
    found.sort();
    found
}

pub fn analyze(request: &AnalyzeRequest) -> Result<Value, CliError> {
    let series = ObservableSeries::load(&request.series)?;
    let mut report = serde_json::Map::new();
    report.insert("request".into(), serde_json::to_value(request)?);

    if let Some((t_relax, t_rec)) = request.average_window {
        let names: Vec<String> = if request.channels.is_empty() {
            series.channel_names().map(str::to_string).collect()
        } else {
            request.channels.clone()
        };
        let mut averages = IndexMap::new();
        for name in &names {
            averages.insert(name.clone(), quasistationary_average(&series, name, t_relax, t_rec)?);
        }
        report.insert("quasistationary_average".into(), serde_json::to_value(averages)?);
    }

    if let Some(epsilon) = request.front_epsilon {
        let channels = numbered(&series, "Gpm");
        if channels.is_empty() {
            return Err(ObservableError::MissingChannel("Gpm_1".into()).into());
        }
        let columns: Vec<&[f64]> = channels.iter().map(|(_, n)| series.channel(n)).collect::<Result<_, _>>()?;
        let profiles: Vec<Vec<f64>> = (0..series.len()).map(|k| columns.iter().map(|c| c[k]).collect()).collect();
        let front = horizon_front(series.times(), &profiles, epsilon);
        report.insert("horizon".into(), serde_json::to_value(front)?);
    }

    if let Some((lo, hi)) = request.peak_window {
        let mut channels = numbered(&series, "NDelta");
        if channels.is_empty() {
            channels = numbered(&series, "Delta");
        }
        if channels.is_empty() {
            return Err(ObservableError::MissingChannel("Delta_0".into()).into());
        }
        let grid: Vec<f64> = series
            .metadata
            .parameters
            .get("q_grid")
            .and_then(|v| serde_json::from_value(v.clone()).ok())
            .ok_or_else(|| ObservableError::MalformedSeries("metadata lacks q_grid".into()))?;
        let last = series.len() - 1;
        let q: Vec<f64> = channels.iter().map(|(k, _)| grid[*k]).collect();
        let values: Vec<f64> = channels.iter().map(|(_, n)| series.channel(n).map(|c| c[last])).collect::<Result<_, _>>()?;
        let peak = locate_peak(&q, &values, lo, hi);
        report.insert(
            "peak".into(),
            json!({ "time": series.times()[last], "q": peak.map(|p| p.0), "value": peak.map(|p| p.1) }),
        );
    }

    if let Some(path) = &request.compare {
        let other = ObservableSeries::load(path)?;
        let names: Vec<&str> = request.channels.iter().map(String::as_str).collect();
        let diff = max_abs_deviation(&series, &other, &names)?;
        report.insert("max_abs_deviation".into(), serde_json::to_value(diff)?);
    }

    if let Some(path) = &request.entropy_reference {
        let reference = ObservableSeries::load(path)?;
        let threshold = request.crossover_threshold.unwrap_or(0.1);
        let mut result = IndexMap::new();
        for (l, name) in numbered(&series, "S") {
            let s_block = series.channel(&name)?;
            let deficit: Vec<f64> = series
                .times()
                .iter()
                .zip(s_block)
                .map(|(&t, &s)| {
                    let even = reference.interpolate("S_even", t)?;
                    let odd = reference.interpolate("S_odd", t)?;
                    Ok(entropy_deficit(l, s, even, odd))
                })
                .collect::<Result<_, ObservableError>>()?;
            let crossover = crossover_time(series.times(), &deficit, threshold);
            result.insert(name, json!({ "deficit": deficit, "crossover_time": crossover }));
        }
        report.insert("entropy_deficit".into(), serde_json::to_value(result)?);
    }
    Ok(Value::Object(report))
}
