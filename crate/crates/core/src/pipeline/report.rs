use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::analysis::TrendFit;
use crate::evidence::BeliefInterval;
use crate::index::InnovIndex;
use crate::indicators::{CycleStats, Indicator, IndicatorSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Warning {
    pub stage: String,
    /// Stable snake_case identifier, e.g. `no_cycles` or `partial_index`.
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendEntry {
    pub indicator: Indicator,
    pub fit: TrendFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceReport {
    pub source_id: String,
    pub discount: f64,
    pub nov: IndicatorSeries,
    pub dem: IndicatorSeries,
    pub nov_cycles: Option<CycleStats>,
    pub dem_cycles: Option<CycleStats>,
    pub imp: Option<f64>,
    pub trends: Vec<TrendEntry>,
}

/// Crisp value (averaged over sources) and fused belief interval of one indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSummary {
    pub crisp: Option<f64>,
    pub belief: Option<BeliefInterval>,
    pub sources: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectReport {
    pub object_id: String,
    pub window: (i32, i32),
    pub query_ids: Vec<String>,
    /// Frame intervals making up the hypothesis scored by belief and plausibility.
    pub target_intervals: Vec<usize>,
    pub sources: Vec<SourceReport>,
    pub nov: IndicatorSummary,
    pub dem: IndicatorSummary,
    pub imp: IndicatorSummary,
    pub index: Option<InnovIndex>,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(format!("unknown report format {s:?} (expected json or csv)")),
        }
    }
}

pub const SERIES_HEADER: [&str; 4] = ["year", "source_id", "indicator", "value"];
pub const INDEX_HEADER: [&str; 8] =
    ["object_id", "crisp_ix", "interval_lo", "interval_hi", "w_nov", "w_dem", "w_imp", "flags"];

impl ObjectReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Io(format!("report: {e}")))
    }

    /// Index flags: `partial` without implementability, `no_interval` when no
    /// interval index could be formed.
    pub fn flags(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        match &self.index {
            Some(ix) => {
                if ix.partial {
                    out.push("partial");
                }
                if ix.interval.is_none() {
                    out.push("no_interval");
                }
            }
            None => out.push("no_index"),
        }
        out
    }
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, PipelineError> {
    let bytes = w.into_inner().map_err(|e| PipelineError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| PipelineError::Io(e.to_string()))
}

fn io(e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Io(e.to_string())
}

/// One row per (year, source, indicator), years ascending.
pub fn series_csv(report: &ObjectReport) -> Result<String, PipelineError> {
    let mut rows: Vec<(i32, &str, Indicator, f64)> = Vec::new();
    for s in &report.sources {
        for series in [&s.nov, &s.dem] {
            rows.extend(series.points.iter().map(|p| (p.year, s.source_id.as_str(), series.indicator, p.value)));
        }
    }
    rows.sort_by(|a, b| (a.0, a.1, a.2).cmp(&(b.0, b.1, b.2)));
    let mut w = csv_writer();
    w.write_record(SERIES_HEADER).map_err(io)?;
    for (year, source, indicator, value) in rows {
        w.write_record([year.to_string(), source.to_string(), indicator.to_string(), value.to_string()])
            .map_err(io)?;
    }
    finish(w)
}

pub fn index_csv(reports: &[ObjectReport]) -> Result<String, PipelineError> {
    let mut w = csv_writer();
    w.write_record(INDEX_HEADER).map_err(io)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in reports {
        let ix = r.index.as_ref();
        w.write_record([
            r.object_id.clone(),
            opt(ix.map(|i| i.crisp)),
            opt(ix.and_then(|i| i.interval).map(|iv| iv.lo)),
            opt(ix.and_then(|i| i.interval).map(|iv| iv.hi)),
            opt(ix.map(|i| i.weights.w_nov)),
            opt(ix.map(|i| i.weights.w_dem)),
            opt(ix.map(|i| i.weights.w_imp)),
            r.flags().join(";"),
        ])
        .map_err(io)?;
    }
    finish(w)
}

/// File stem for an object id: anything outside `[A-Za-z0-9._-]` becomes `_`.
pub fn file_stem(object_id: &str) -> String {
    object_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect()
}

/// Writes the report into `dir`: `<object>.json`, or `<object>_series.csv`
/// and `<object>_index.csv`.
pub fn emit_report(report: &ObjectReport, format: ReportFormat, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    std::fs::create_dir_all(dir).map_err(io)?;
    let stem = file_stem(&report.object_id);
    let files = match format {
        ReportFormat::Json => vec![(dir.join(format!("{stem}.json")), report.to_json())],
        ReportFormat::Csv => vec![
            (dir.join(format!("{stem}_series.csv")), series_csv(report)?),
            (dir.join(format!("{stem}_index.csv")), index_csv(std::slice::from_ref(report))?),
        ],
    };
    for (path, text) in &files {
        std::fs::write(path, text).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
