//! Novelty, demand and implementability indicators.
//!
//! Novelty for a set of query hit counts `R_1..R_N` is `1 - agg f(R_k)`,
//! demand for access signals `F_1..F_S` is `agg f(F_k)`, where `f` is one of
//! the [`NormalizationKind`]s and `agg` the mean or the median.
//! Implementability is derived from the mean spacing of local maxima in the
//! yearly novelty and demand series.

mod cycles;
mod normalize;

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{IngestError, MeasurementStore, Metric};

pub use cycles::{find_local_maxima, local_maxima_indices, CycleStats};
pub use normalize::{normalize, normalize_with, AggregationKind, NormOptions, NormalizationKind, Normalizer};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IndicatorError {
    #[error("empty input")]
    EmptyInput,
    #[error("value {0} is negative or not finite")]
    InvalidValue(f64),
    #[error("exponential normalization needs a positive minimum (enable the epsilon substitution)")]
    ZeroMin,
    #[error("too few points: need {needed}, found {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("no cycles: found {maxima} local maxima, need at least 2")]
    NoCycles { maxima: usize },
    #[error("observation window has zero length")]
    ZeroWindow,
    #[error("no data: {0}")]
    NoData(String),
}

impl From<IngestError> for IndicatorError {
    fn from(e: IngestError) -> Self {
        IndicatorError::NoData(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Indicator {
    Nov,
    Dem,
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Indicator::Nov => "Nov",
            Indicator::Dem => "Dem",
        })
    }
}

impl FromStr for Indicator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Nov" | "nov" => Ok(Indicator::Nov),
            "Dem" | "dem" => Ok(Indicator::Dem),
            _ => Err(format!("unknown indicator {s:?}")),
        }
    }
}

impl Indicator {
    /// Per-query contribution of a normalized value.
    fn orient(&self, normalized: f64) -> f64 {
        match self {
            Indicator::Nov => 1.0 - normalized,
            Indicator::Dem => normalized,
        }
    }
}

/// Where the normalization bounds of a series come from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormScope {
    /// min/max over every value in the window, so yearly points are comparable.
    #[default]
    Window,
    /// min/max over each year's per-query vector separately.
    Year,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorParams {
    pub normalization: NormalizationKind,
    pub aggregation: AggregationKind,
    #[serde(default)]
    pub scope: NormScope,
    #[serde(default)]
    pub options: NormOptions,
}

impl IndicatorParams {
    pub fn new(normalization: NormalizationKind, aggregation: AggregationKind) -> Self {
        Self { normalization, aggregation, scope: NormScope::Window, options: NormOptions::default() }
    }
}

fn compute(
    indicator: Indicator,
    values: &[f64],
    kind: NormalizationKind,
    agg: AggregationKind,
    options: NormOptions,
) -> Result<f64, IndicatorError> {
    let normalized = normalize_with(values, kind, options)?;
    Ok(indicator.orient(agg.apply(&normalized)?).clamp(0.0, 1.0))
}

/// Novelty of one (object, source, year) slice of hit counts.
pub fn compute_nov(values: &[f64], kind: NormalizationKind, agg: AggregationKind) -> Result<f64, IndicatorError> {
    compute(Indicator::Nov, values, kind, agg, NormOptions::default())
}

pub fn compute_nov_with(
    values: &[f64],
    kind: NormalizationKind,
    agg: AggregationKind,
    options: NormOptions,
) -> Result<f64, IndicatorError> {
    compute(Indicator::Nov, values, kind, agg, options)
}

/// Demand of one (object, source, year) slice of access signals.
pub fn compute_dem(values: &[f64], kind: NormalizationKind, agg: AggregationKind) -> Result<f64, IndicatorError> {
    compute(Indicator::Dem, values, kind, agg, NormOptions::default())
}

pub fn compute_dem_with(
    values: &[f64],
    kind: NormalizationKind,
    agg: AggregationKind,
    options: NormOptions,
) -> Result<f64, IndicatorError> {
    compute(Indicator::Dem, values, kind, agg, options)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub year: i32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSeries {
    pub object_id: String,
    pub source_id: String,
    pub indicator: Indicator,
    pub points: Vec<SeriesPoint>,
    pub normalization: NormalizationKind,
    pub aggregation: AggregationKind,
    pub window: (i32, i32),
}

impl IndicatorSeries {
    pub fn years(&self) -> Vec<i32> {
        self.points.iter().map(|p| p.year).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn last(&self) -> Option<SeriesPoint> {
        self.points.last().copied()
    }

    /// `t_m - t_0`.
    pub fn window_length(&self) -> i32 {
        self.window.1 - self.window.0
    }
}

/// A series together with the per-query contributions behind each point.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesDetail {
    pub series: IndicatorSeries,
    /// Per point: the oriented normalized value of every query
    /// (`1 - f(R_k)` for novelty, `f(F_k)` for demand).
    pub samples: Vec<Vec<f64>>,
}

pub fn build_series(
    store: &MeasurementStore,
    object_id: &str,
    source_id: &str,
    indicator: Indicator,
    metric: Metric,
    params: IndicatorParams,
    window: RangeInclusive<i32>,
) -> Result<IndicatorSeries, IndicatorError> {
    Ok(build_series_detailed(store, object_id, source_id, indicator, metric, params, window)?.series)
}

pub fn build_series_detailed(
    store: &MeasurementStore,
    object_id: &str,
    source_id: &str,
    indicator: Indicator,
    metric: Metric,
    params: IndicatorParams,
    window: RangeInclusive<i32>,
) -> Result<SeriesDetail, IndicatorError> {
    let bounds = (*window.start(), *window.end());
    let slices = store.query_series(object_id, source_id, metric, window)?;
    let observed: Vec<(i32, &[f64])> =
        slices.iter().filter_map(|s| s.values.as_deref().map(|v| (s.year, v))).collect();

    let window_norm = match params.scope {
        NormScope::Window => {
            let all: Vec<f64> = observed.iter().flat_map(|(_, v)| v.iter().copied()).collect();
            Some(Normalizer::fit(&all, params.normalization, params.options)?)
        }
        NormScope::Year => None,
    };

    let mut points = Vec::with_capacity(observed.len());
    let mut samples = Vec::with_capacity(observed.len());
    for (year, values) in observed {
        let norm = match window_norm {
            Some(n) => n,
            None => Normalizer::fit(values, params.normalization, params.options)?,
        };
        let normalized = norm.apply_all(values);
        let value = indicator.orient(params.aggregation.apply(&normalized)?).clamp(0.0, 1.0);
        points.push(SeriesPoint { year, value });
        samples.push(normalized.into_iter().map(|x| indicator.orient(x)).collect());
    }

    Ok(SeriesDetail {
        series: IndicatorSeries {
            object_id: object_id.to_string(),
            source_id: source_id.to_string(),
            indicator,
            points,
            normalization: params.normalization,
            aggregation: params.aggregation,
            window: bounds,
        },
        samples,
    })
}

/// How the two recovery periods enter implementability.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpVariant {
    /// `1 - f((Δt_N + Δt_D) / 2)`.
    #[default]
    Averaged,
    /// `1 - f(Δt_N + Δt_D) / 2`; never below 0.5.
    Literal,
}

impl FromStr for ImpVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "averaged" => Ok(ImpVariant::Averaged),
            "literal" => Ok(ImpVariant::Literal),
            _ => Err(format!("unknown implementability variant {s:?} (expected averaged or literal)")),
        }
    }
}

/// Normalizes a period against the observation window length: `clamp(x / L, 0, 1)`.
pub fn normalize_period(period: f64, window_length: f64) -> Result<f64, IndicatorError> {
    if !(window_length > 0.0) {
        return Err(IndicatorError::ZeroWindow);
    }
    Ok((period / window_length).clamp(0.0, 1.0))
}

pub fn imp_from_periods(
    delta_nov: f64,
    delta_dem: f64,
    window_length: f64,
    variant: ImpVariant,
) -> Result<f64, IndicatorError> {
    let imp = match variant {
        ImpVariant::Averaged => 1.0 - normalize_period((delta_nov + delta_dem) / 2.0, window_length)?,
        ImpVariant::Literal => 1.0 - 0.5 * normalize_period(delta_nov + delta_dem, window_length)?,
    };
    Ok(imp.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpResult {
    pub imp: f64,
    pub nov_cycles: CycleStats,
    pub dem_cycles: CycleStats,
}

pub fn compute_imp(
    nov: &IndicatorSeries,
    dem: &IndicatorSeries,
    window_length: f64,
    variant: ImpVariant,
) -> Result<ImpResult, IndicatorError> {
    if !(window_length > 0.0) {
        return Err(IndicatorError::ZeroWindow);
    }
    let nov_cycles = find_local_maxima(nov)?;
    let dem_cycles = find_local_maxima(dem)?;
    let imp = imp_from_periods(nov_cycles.delta_t, dem_cycles.delta_t, window_length, variant)?;
    Ok(ImpResult { imp, nov_cycles, dem_cycles })
}
