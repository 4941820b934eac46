use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::series::interpolate;
use super::{ObservableError, ObservableResult, ObservableSeries};

/// Trapezoidal time average of `channel` over `[t_relax, t_rec]`. The window
/// ends are interpolated linearly when they fall between samples.
pub fn quasistationary_average(
    series: &ObservableSeries,
    channel: &str,
    t_relax: f64,
    t_rec: f64,
) -> ObservableResult<f64> {
    let values = series.channel(channel)?;
    time_average(series.times(), values, t_relax, t_rec)
}

pub(crate) fn time_average(times: &[f64], values: &[f64], t_from: f64, t_to: f64) -> ObservableResult<f64> {
    if !(t_from < t_to) {
        return Err(ObservableError::WindowOutsideSeries(t_from, t_to));
    }
    let outside = || ObservableError::WindowOutsideSeries(t_from, t_to);
    let v_from = interpolate(times, values, t_from).ok_or_else(outside)?;
    let v_to = interpolate(times, values, t_to).ok_or_else(outside)?;
    let mut points = vec![(t_from, v_from)];
    points.extend(times.iter().zip(values).filter(|(&t, _)| t > t_from && t < t_to).map(|(&t, &v)| (t, v)));
    points.push((t_to, v_to));
    // integrating the offset from the first value keeps constants exact
    let integral: f64 =
        points.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * ((w[0].1 - v_from) + (w[1].1 - v_from))).sum();
    Ok(v_from + integral / (t_to - t_from))
}

/// Least-squares line `y = slope·x + intercept`.
pub(crate) fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontAnalysis {
    /// `l*(t)` per sample.
    pub fronts: Vec<usize>,
    /// First time distance `l` departs from its baseline, indexed by `l - 1`.
    pub arrivals: Vec<Option<f64>>,
    /// Slope of the fit of `l` against its arrival time; `None` with fewer
    /// than two distinct arrivals.
    pub speed: Option<f64>,
    pub intercept: Option<f64>,
    pub fitted_distances: usize,
}

/// Front of a spreading perturbation.
///
/// `profiles[k][l - 1]` holds a correlator at distance `l` and time
/// `times[k]`; `profiles[0]` is the baseline. The per-sample front is the
/// largest `l` such that every distance up to `l` differs from the baseline by
/// more than `epsilon`. The speed comes from first-passage times: distance `l`
/// arrives at the first sample where it exceeds `epsilon`, and `l` is fitted
/// linearly against those times. Later returns through the baseline (after
/// reflections or recurrences) do not enter the fit.
pub fn horizon_front(times: &[f64], profiles: &[Vec<f64>], epsilon: f64) -> FrontAnalysis {
    let Some(baseline) = profiles.first() else {
        return FrontAnalysis { fronts: Vec::new(), arrivals: Vec::new(), speed: None, intercept: None, fitted_distances: 0 };
    };
    let departed = |p: &Vec<f64>, l: usize| (p[l] - baseline[l]).abs() > epsilon;
    let fronts: Vec<usize> = profiles.iter().map(|p| (0..baseline.len()).take_while(|&l| departed(p, l)).count()).collect();
    let arrivals: Vec<Option<f64>> = (0..baseline.len())
        .map(|l| profiles.iter().zip(times).find(|(p, _)| departed(p, l)).map(|(_, &t)| t))
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) =
        arrivals.iter().enumerate().filter_map(|(l, t)| t.map(|t| (t, (l + 1) as f64))).unzip();
    let fit = linear_fit(&x, &y);
    FrontAnalysis { fronts, arrivals, speed: fit.map(|f| f.0), intercept: fit.map(|f| f.1), fitted_distances: x.len() }
}

/// Crossover time of an entropy deficit `ΔS_l(t) = S∞(t) - S_l(t)`.
///
/// Past the crossover the edge block saturates while `S∞` keeps growing, so
/// `ΔS_l` rises linearly. The crossover is the zero intercept of a straight
/// line fitted to the samples where `ΔS_l ≥ threshold`, i.e. the kink of the
/// sharp two-regime picture.
pub fn crossover_time(times: &[f64], deficit: &[f64], threshold: f64) -> Option<f64> {
    let first = deficit.iter().position(|&d| d >= threshold)?;
    let (x, y): (Vec<f64>, Vec<f64>) = times[first..].iter().copied().zip(deficit[first..].iter().copied()).unzip();
    let (slope, intercept) = linear_fit(&x, &y)?;
    (slope > 0.0).then(|| -intercept / slope)
}

/// Location and value of the largest entry with `lo < q < hi`.
pub fn locate_peak(q: &[f64], values: &[f64], lo: f64, hi: f64) -> Option<(f64, f64)> {
    q.iter()
        .zip(values)
        .filter(|(&x, _)| x > lo && x < hi)
        .fold(None, |best: Option<(f64, f64)>, (&x, &v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((x, v)),
        })
}

/// Per-channel maximum absolute deviation over the time samples shared by
/// both series (times equal within `1e-9`). Only channels present in both
/// are compared; `channels` restricts the set when non-empty.
pub fn max_abs_deviation(
    a: &ObservableSeries,
    b: &ObservableSeries,
    channels: &[&str],
) -> ObservableResult<IndexMap<String, f64>> {
    let names: Vec<String> = if channels.is_empty() {
        a.channel_names().filter(|n| b.has_channel(n)).map(str::to_string).collect()
    } else {
        channels.iter().map(|s| s.to_string()).collect()
    };
    let mut pairs = Vec::new();
    let (ta, tb) = (a.times(), b.times());
    let mut j = 0;
    for (i, &t) in ta.iter().enumerate() {
        while j < tb.len() && tb[j] < t - 1e-9 {
            j += 1;
        }
        if j < tb.len() && (tb[j] - t).abs() <= 1e-9 {
            pairs.push((i, j));
        }
    }
    if pairs.is_empty() {
        return Err(ObservableError::MalformedSeries("series share no time samples".into()));
    }
    let mut out = IndexMap::new();
    for name in names {
        let (ca, cb) = (a.channel(&name)?, b.channel(&name)?);
        let dev = pairs.iter().map(|&(i, j)| (ca[i] - cb[j]).abs()).fold(0.0, f64::max);
        out.insert(name, dev);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::SeriesMetadata;
    use std::f64::consts::PI;

    fn series_of(f: impl Fn(f64) -> f64, n: usize, t_end: f64) -> ObservableSeries {
        let mut s = ObservableSeries::new(SeriesMetadata::new("ed"));
        for k in 0..=n {
            let t = t_end * k as f64 / n as f64;
            s.push(t, &[("x", f(t))]).unwrap();
        }
        s
    }

    #[test]
    fn constant_channel_average_is_exact() {
        let s = series_of(|_| 0.3, 50, 10.0);
        assert_eq!(quasistationary_average(&s, "x", 1.3, 7.7).unwrap(), 0.3);
    }

    #[test]
    fn sinusoid_over_whole_periods() {
        let s = series_of(|t| 0.2 + (2.0 * PI * t).sin(), 4000, 10.0);
        let avg = quasistationary_average(&s, "x", 2.0, 7.0).unwrap();
        assert!((avg - 0.2).abs() < 1e-6);
    }

    #[test]
    fn window_outside_is_rejected() {
        let s = series_of(|t| t, 10, 1.0);
        assert!(quasistationary_average(&s, "x", 0.5, 1.5).is_err());
        assert!(quasistationary_average(&s, "x", 0.5, 0.5).is_err());
        assert!(matches!(quasistationary_average(&s, "y", 0.1, 0.5), Err(ObservableError::MissingChannel(_))));
    }

    #[test]
    fn front_of_linear_spread() {
        let times: Vec<f64> = (0..20).map(|k| k as f64 * 0.5).collect();
        let profiles: Vec<Vec<f64>> = times
            .iter()
            .map(|&t| (1..=30).map(|l| if (l as f64) <= 3.0 * t { 1.0 } else { 0.0 }).collect())
            .collect();
        let fa = horizon_front(&times, &profiles, 1e-4);
        assert_eq!(fa.fronts[0], 0);
        assert!((fa.speed.unwrap() - 3.0).abs() < 0.1);
    }

    #[test]
    fn returns_to_baseline_do_not_bend_the_front() {
        let times: Vec<f64> = (0..40).map(|k| k as f64 * 0.25).collect();
        let profiles: Vec<Vec<f64>> = times
            .iter()
            .map(|&t| (1..=12).map(|l| if (l as f64) <= 2.0 * t && t < 7.0 { (t - 4.0).signum() } else { 0.0 }).collect())
            .collect();
        let fa = horizon_front(&times, &profiles, 1e-3);
        assert_eq!(fa.fitted_distances, 12);
        assert!((fa.speed.unwrap() - 2.0).abs() < 0.1);
        assert_eq!(*fa.fronts.last().unwrap(), 0);
    }

    #[test]
    fn crossover_of_kinked_curve() {
        let times: Vec<f64> = (0..200).map(|k| k as f64 * 0.05).collect();
        let deficit: Vec<f64> = times.iter().map(|&t| 0.7 * (t - 4.0).max(0.0)).collect();
        let t = crossover_time(&times, &deficit, 0.1).unwrap();
        assert!((t - 4.0).abs() < 1e-9);
    }

    #[test]
    fn peak_in_window() {
        let q = [0.0, 1.0, 2.0, 3.0];
        let v = [9.0, 1.0, 3.0, 2.0];
        assert_eq!(locate_peak(&q, &v, 0.5, 3.5), Some((2.0, 3.0)));
        assert_eq!(locate_peak(&q, &v, 3.5, 4.0), None);
    }

    #[test]
    fn deviation_over_common_grid() {
        let a = series_of(|t| t, 10, 1.0);
        let b = series_of(|t| t + 0.01 * t, 5, 1.0);
        let d = max_abs_deviation(&a, &b, &[]).unwrap();
        assert!((d["x"] - 0.01).abs() < 1e-12);
    }
}
