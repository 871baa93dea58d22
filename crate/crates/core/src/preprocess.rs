//! Curation of point time series: well-change segmentation, gap filling,
//! level-to-storage conversion, baseline anomalies and min-max scaling.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::time::{Month, TimeAxis};

/// Wells with monthly series on a shared time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PointObservationSet {
    pub points: Vec<GeoPoint>,
    pub axis: TimeAxis,
    // n × T, NaN where missing.
    values: Vec<Vec<f64>>,
}

impl PointObservationSet {
    pub fn new(points: Vec<GeoPoint>, axis: TimeAxis, series: Vec<Vec<Option<f64>>>) -> Result<Self> {
        if points.len() != series.len() {
            return Err(Error::Domain(format!(
                "{} points but {} series",
                points.len(),
                series.len()
            )));
        }
        let mut values = Vec::with_capacity(series.len());
        for (p, s) in points.iter().zip(series) {
            if s.len() != axis.len {
                return Err(Error::Alignment(format!(
                    "series {} has {} steps, axis has {}",
                    p.id,
                    s.len(),
                    axis.len
                )));
            }
            let mut row = Vec::with_capacity(s.len());
            for v in s {
                match v {
                    Some(x) if !x.is_finite() => {
                        return Err(Error::Domain(format!("non-finite value in series {}", p.id)))
                    }
                    Some(x) => row.push(x),
                    None => row.push(f64::NAN),
                }
            }
            values.push(row);
        }
        Ok(PointObservationSet { points, axis, values })
    }

    /// Builds a set with every value present.
    pub fn complete(points: Vec<GeoPoint>, axis: TimeAxis, series: Vec<Vec<f64>>) -> Result<Self> {
        let opt = series.into_iter().map(|s| s.into_iter().map(Some).collect()).collect();
        Self::new(points, axis, opt)
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn n_times(&self) -> usize {
        self.axis.len
    }

    pub fn value(&self, i: usize, t: usize) -> Option<f64> {
        let v = self.values[i][t];
        (!v.is_nan()).then_some(v)
    }

    pub fn is_valid(&self, i: usize, t: usize) -> bool {
        !self.values[i][t].is_nan()
    }

    pub fn series(&self, i: usize) -> Vec<Option<f64>> {
        (0..self.n_times()).map(|t| self.value(i, t)).collect()
    }

    /// The full series of well `i` when it has no gaps.
    pub fn complete_series(&self, i: usize) -> Option<&[f64]> {
        let row = &self.values[i];
        row.iter().all(|v| !v.is_nan()).then_some(row.as_slice())
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().flatten().all(|v| !v.is_nan())
    }

    pub fn n_valid(&self, i: usize) -> usize {
        self.values[i].iter().filter(|v| !v.is_nan()).count()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.points.iter().position(|p| p.id == id)
    }

    /// Values of all wells at time `t`; errors if any is missing.
    pub fn values_at(&self, t: usize) -> Result<Vec<f64>> {
        (0..self.n_points())
            .map(|i| {
                self.value(i, t).ok_or_else(|| {
                    Error::InsufficientData(format!(
                        "well {} has no value at {}",
                        self.points[i].id,
                        self.axis.month(t)
                    ))
                })
            })
            .collect()
    }

    pub fn subset(&self, indices: &[usize]) -> PointObservationSet {
        PointObservationSet {
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
            axis: self.axis,
            values: indices.iter().map(|&i| self.values[i].clone()).collect(),
        }
    }

    pub(crate) fn map_values(&self, f: impl Fn(usize, &[f64]) -> Vec<f64>) -> PointObservationSet {
        PointObservationSet {
            points: self.points.clone(),
            axis: self.axis,
            values: (0..self.n_points()).map(|i| f(i, &self.values[i])).collect(),
        }
    }
}

/// Split indices where rolling statistics shift abruptly, suggesting the
/// monitoring well was replaced.
///
/// For each candidate index `s` the trailing window `[s-w, s)` and leading
/// window `[s, s+w)` are compared. The mean shift is scored as
/// `|m2 - m1| / (σ·sqrt(1/n1 + 1/n2))` and the spread shift as
/// `|sd2 - sd1| / (σ·sqrt(1/(2(n1-1)) + 1/(2(n2-1))))`, where σ is the
/// standard deviation of the whole valid series. Candidates scoring above
/// `z_threshold` are accepted greedily by score, at least `window` apart.
pub fn segment_series(series: &[Option<f64>], window: usize, z_threshold: f64) -> Result<Vec<usize>> {
    if window < 12 {
        return Err(Error::Domain(format!("segmentation window {window} < 12")));
    }
    let n = series.len();
    if n < 2 * window {
        return Ok(Vec::new());
    }
    let valid: Vec<f64> = series.iter().flatten().copied().collect();
    if valid.len() < 2 {
        return Ok(Vec::new());
    }
    let sigma = std_dev(&valid);
    if !(sigma > 0.0) {
        return Ok(Vec::new());
    }
    let min_count = (window / 2).max(2);
    let mut scored: Vec<(f64, usize)> = Vec::new();
    for s in window..=n - window {
        let left: Vec<f64> = series[s - window..s].iter().flatten().copied().collect();
        let right: Vec<f64> = series[s..s + window].iter().flatten().copied().collect();
        if left.len() < min_count || right.len() < min_count {
            continue;
        }
        let (n1, n2) = (left.len() as f64, right.len() as f64);
        let z_mean = (mean(&right) - mean(&left)).abs() / (sigma * (1.0 / n1 + 1.0 / n2).sqrt());
        let se_sd = sigma * (0.5 / (n1 - 1.0) + 0.5 / (n2 - 1.0)).sqrt();
        let z_sd = (std_dev(&right) - std_dev(&left)).abs() / se_sd;
        let z = z_mean.max(z_sd);
        if z > z_threshold {
            scored.push((z, s));
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut splits: Vec<usize> = Vec::new();
    for (_, s) in scored {
        if splits.iter().all(|&a| a.abs_diff(s) >= window) {
            splits.push(s);
        }
    }
    splits.sort_unstable();
    Ok(splits)
}

/// Contiguous index ranges delimited by `splits`.
pub fn segments(len: usize, splits: &[usize]) -> Vec<Range<usize>> {
    let mut out = Vec::with_capacity(splits.len() + 1);
    let mut start = 0;
    for &s in splits {
        out.push(start..s);
        start = s;
    }
    out.push(start..len);
    out
}

/// Monthly climatology (mean per calendar month) over valid values.
fn climatology(series: &[Option<f64>], start: Month) -> [Option<f64>; 12] {
    let mut sum = [0.0; 12];
    let mut count = [0usize; 12];
    for (t, v) in series.iter().enumerate() {
        if let Some(v) = v {
            let m = start.plus(t as i32).month_index();
            sum[m] += v;
            count[m] += 1;
        }
    }
    let mut out = [None; 12];
    for m in 0..12 {
        if count[m] > 0 {
            out[m] = Some(sum[m] / count[m] as f64);
        }
    }
    out
}

/// Fills gaps with the monthly climatology plus a linearly interpolated
/// deseasonalized residual. Leading and trailing gaps get the climatology
/// alone. Valid entries pass through unchanged.
pub fn fill_gaps(series: &[Option<f64>], start: Month) -> Result<Vec<f64>> {
    let n_valid = series.iter().flatten().count();
    if n_valid < 24 {
        return Err(Error::InsufficientData(format!(
            "{n_valid} valid months, gap filling needs 24"
        )));
    }
    let clim = climatology(series, start);
    if let Some(m) = clim.iter().position(Option::is_none) {
        return Err(Error::InsufficientData(format!(
            "no valid value for calendar month {}",
            m + 1
        )));
    }
    let clim: Vec<f64> = clim.iter().map(|c| c.unwrap()).collect();
    let month = |t: usize| start.plus(t as i32).month_index();

    let anchors: Vec<(usize, f64)> = series
        .iter()
        .enumerate()
        .filter_map(|(t, v)| v.map(|v| (t, v - clim[month(t)])))
        .collect();

    let mut out = Vec::with_capacity(series.len());
    let mut next: usize = 0; // first anchor with index >= t
    for (t, v) in series.iter().enumerate() {
        if let Some(v) = v {
            out.push(*v);
            next += 1;
            continue;
        }
        let residual = match (next.checked_sub(1).map(|k| anchors[k]), anchors.get(next)) {
            (Some((t0, r0)), Some(&(t1, r1))) => {
                let w = (t - t0) as f64 / (t1 - t0) as f64;
                r0 + w * (r1 - r0)
            }
            _ => 0.0,
        };
        out.push(clim[month(t)] + residual);
    }
    Ok(out)
}

/// Converts depth to water (m below ground) into storage (m of water):
/// `storage = -sy · depth`.
pub fn gwl_to_gws(depth: &[f64], sy: f64) -> Result<Vec<f64>> {
    if !(sy > 0.0 && sy <= 1.0) {
        return Err(Error::Domain(format!("storage coefficient {sy} outside (0, 1]")));
    }
    Ok(depth.iter().map(|d| -sy * d).collect())
}

/// Subtracts the mean over the baseline months `[first, last]`.
pub fn anomaly_normalize(series: &[f64], axis: &TimeAxis, baseline: (Month, Month)) -> Result<Vec<f64>> {
    let r = axis.range_within(baseline.0, baseline.1);
    let r = r.start..r.end.min(series.len());
    if r.len() < 12 {
        return Err(Error::InsufficientData(format!(
            "baseline {}..{} overlaps only {} months of the series",
            baseline.0,
            baseline.1,
            r.len()
        )));
    }
    let m = mean(&series[r]);
    Ok(series.iter().map(|v| v - m).collect())
}

/// Per-channel min-max statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalingParams {
    /// Statistics of each channel over `fit_subset` only.
    pub fn fit(data: &[Vec<f64>], fit_subset: &[usize]) -> Result<Self> {
        if fit_subset.is_empty() {
            return Err(Error::InsufficientData("empty min-max fit subset".into()));
        }
        let mut min = Vec::with_capacity(data.len());
        let mut max = Vec::with_capacity(data.len());
        for (c, channel) in data.iter().enumerate() {
            let (lo, hi) = fit_subset
                .iter()
                .map(|&k| channel[k])
                .filter(|v| v.is_finite())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            if !(hi > lo) {
                return Err(Error::ConstantChannel(c));
            }
            min.push(lo);
            max.push(hi);
        }
        Ok(ScalingParams { min, max })
    }

    pub fn from_range(min: f64, max: f64) -> Result<Self> {
        if !(max > min) {
            return Err(Error::ConstantChannel(0));
        }
        Ok(ScalingParams {
            min: vec![min],
            max: vec![max],
        })
    }

    pub fn n_channels(&self) -> usize {
        self.min.len()
    }

    pub fn transform(&self, channel: usize, x: f64) -> f64 {
        (x - self.min[channel]) / (self.max[channel] - self.min[channel])
    }

    pub fn inverse(&self, channel: usize, x: f64) -> f64 {
        x * (self.max[channel] - self.min[channel]) + self.min[channel]
    }

    pub fn transform_all(&self, data: &[Vec<f64>]) -> Vec<Vec<f64>> {
        data.iter()
            .enumerate()
            .map(|(c, ch)| ch.iter().map(|&x| self.transform(c, x)).collect())
            .collect()
    }

    pub fn inverse_all(&self, data: &[Vec<f64>]) -> Vec<Vec<f64>> {
        data.iter()
            .enumerate()
            .map(|(c, ch)| ch.iter().map(|&x| self.inverse(c, x)).collect())
            .collect()
    }
}

/// Fits min-max statistics on `fit_subset` (sample indices) and scales every
/// sample. Values outside the fit range are not clipped.
pub fn minmax_fit_transform(data: &[Vec<f64>], fit_subset: &[usize]) -> Result<(Vec<Vec<f64>>, ScalingParams)> {
    let params = ScalingParams::fit(data, fit_subset)?;
    Ok((params.transform_all(data), params))
}

/// Per-well specific yield, keyed by well id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StorageCoefficients {
    by_id: HashMap<String, f64>,
}

impl StorageCoefficients {
    pub fn new(pairs: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut by_id = HashMap::new();
        for (id, sy) in pairs {
            if !(sy > 0.0 && sy <= 1.0) {
                return Err(Error::Domain(format!(
                    "well {id}: storage coefficient {sy} outside (0, 1]"
                )));
            }
            by_id.insert(id, sy);
        }
        Ok(StorageCoefficients { by_id })
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.by_id.get(id).copied()
    }
}

/// What the point values represent on input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// Depth to water table, meters below ground.
    #[default]
    Depth,
    /// Storage anomalies already in meters; only gap filling is applied.
    StorageAnomaly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationConfig {
    #[serde(default)]
    pub input: InputKind,
    #[serde(default = "default_window")]
    pub segment_window: usize,
    #[serde(default = "default_z")]
    pub segment_z: f64,
    #[serde(default = "default_baseline_start")]
    pub baseline_start: Month,
    #[serde(default = "default_baseline_end")]
    pub baseline_end: Month,
}

fn default_window() -> usize {
    12
}
fn default_z() -> f64 {
    4.0
}
fn default_baseline_start() -> Month {
    Month::new(2004, 1).unwrap()
}
fn default_baseline_end() -> Month {
    Month::new(2009, 12).unwrap()
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig {
            input: InputKind::Depth,
            segment_window: default_window(),
            segment_z: default_z(),
            baseline_start: default_baseline_start(),
            baseline_end: default_baseline_end(),
        }
    }
}

/// One line per dropped or segmented well.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CurationLog {
    pub lines: Vec<String>,
}

impl CurationLog {
    fn note(&mut self, id: &str, msg: impl std::fmt::Display) {
        log::info!("{id}: {msg}");
        self.lines.push(format!("{id}\t{msg}"));
    }
}

/// Runs segment → fill → level-to-storage → anomaly on every well and
/// returns a gap-free set of storage anomalies in meters.
///
/// When a series splits into several segments only the one with the most
/// valid months is kept (renamed `<id>_<k>`, k 1-based) since co-located
/// series would make the kriging system singular.
pub fn curate(
    raw: &PointObservationSet,
    sy: &StorageCoefficients,
    cfg: &CurationConfig,
) -> Result<(PointObservationSet, CurationLog)> {
    let mut log = CurationLog::default();
    let mut points = Vec::new();
    let mut series = Vec::new();
    let axis = raw.axis;
    for i in 0..raw.n_points() {
        let p = &raw.points[i];
        let mut s = raw.series(i);
        let mut id = p.id.clone();

        if cfg.input == InputKind::Depth {
            let splits = segment_series(&s, cfg.segment_window, cfg.segment_z)?;
            if !splits.is_empty() {
                let segs = segments(s.len(), &splits);
                let (k, best) = segs
                    .iter()
                    .enumerate()
                    .max_by_key(|(k, r)| (s[(*r).clone()].iter().flatten().count(), std::cmp::Reverse(*k)))
                    .map(|(k, r)| (k, r.clone()))
                    .unwrap();
                for (t, v) in s.iter_mut().enumerate() {
                    if !best.contains(&t) {
                        *v = None;
                    }
                }
                id = format!("{}_{}", p.id, k + 1);
                let at: Vec<String> = splits.iter().map(|&t| axis.month(t).to_string()).collect();
                log.note(
                    &p.id,
                    format!(
                        "segmented at {}; kept segment {} as {id} ({}..={})",
                        at.join(","),
                        k + 1,
                        axis.month(best.start),
                        axis.month(best.end - 1)
                    ),
                );
            }
        }

        let filled = match fill_gaps(&s, axis.start) {
            Ok(f) => f,
            Err(e) => {
                log.note(&id, format!("dropped: {e}"));
                continue;
            }
        };

        let storage = match cfg.input {
            InputKind::Depth => {
                let Some(coef) = sy.get(&p.id) else {
                    log.note(&id, "dropped: no storage coefficient");
                    continue;
                };
                gwl_to_gws(&filled, coef)?
            }
            InputKind::StorageAnomaly => filled,
        };

        let anomaly = match anomaly_normalize(&storage, &axis, (cfg.baseline_start, cfg.baseline_end)) {
            Ok(a) => a,
            Err(e) => {
                log.note(&id, format!("dropped: {e}"));
                continue;
            }
        };
        let mut point = p.clone();
        point.id = id;
        points.push(point);
        series.push(anomaly);
    }
    if points.is_empty() {
        return Err(Error::InsufficientData("no well survived curation".into()));
    }
    Ok((PointObservationSet::complete(points, axis, series)?, log))
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub(crate) fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}
