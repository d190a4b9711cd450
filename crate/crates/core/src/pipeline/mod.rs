//! End-to-end evaluation of one object: model, queries, indicator series,
//! cycles, belief fusion, index and trends.

mod config;
mod report;

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::fit_trend;
use crate::evidence::{bel_pl, bpa_from_samples, combine_all, BeliefInterval, Bpa, EvidenceError, FocalSet};
use crate::index::{additive_index, interval_index, log_index, IndexOptions, InnovIndex, Provenance};
use crate::indicators::{
    build_series_detailed, find_local_maxima, imp_from_periods, Indicator, IndicatorParams, NormOptions,
    SeriesDetail,
};
use crate::ingest::{IngestError, MeasurementStore, Metric};
use crate::model::{load_model_with, validate_model_with, LinguisticModel, ModelError, ValidationOptions};
use crate::querygen::{generate_unchecked, QueryError};

pub use config::{parse_window, Flags, Overrides, ProjectConfig, SourceConfig};
pub use report::{
    emit_report, file_stem, index_csv, series_csv, IndicatorSummary, ObjectReport, ReportFormat, SourceReport,
    TrendEntry, Warning, INDEX_HEADER, SERIES_HEADER,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no data: {0}")]
    NoData(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Ingest(IngestError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<IngestError> for PipelineError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::NoData { .. } => PipelineError::NoData(e.to_string()),
            other => PipelineError::Ingest(other),
        }
    }
}

impl PipelineError {
    /// 2 for configuration problems, 3 for missing data, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Model(_) => 2,
            PipelineError::NoData(_) => 3,
            _ => 1,
        }
    }
}

struct Run<'a> {
    cfg: &'a ProjectConfig,
    warnings: Vec<Warning>,
}

impl Run<'_> {
    fn warn(&mut self, stage: &str, code: &str, message: impl Into<String>) {
        self.warnings.push(Warning { stage: stage.into(), code: code.into(), message: message.into() });
    }

    fn fuse(&mut self, indicator: &str, bpas: &[Bpa], target: FocalSet) -> Option<BeliefInterval> {
        if bpas.is_empty() {
            return None;
        }
        match combine_all(bpas).and_then(|m| bel_pl(&m, target)) {
            Ok(iv) => Some(iv),
            Err(e) => {
                let code = if matches!(e, EvidenceError::TotalConflict(_)) { "total_conflict" } else { "no_belief" };
                self.warn("evidence", code, format!("{indicator}: {e}"));
                None
            }
        }
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Copy of the object's records restricted to the given query ids.
fn restrict(store: &MeasurementStore, object_id: &str, ids: &BTreeSet<&str>) -> Result<MeasurementStore, PipelineError> {
    let records: Vec<_> =
        store.iter().filter(|r| r.object_id == object_id && ids.contains(r.query_id.as_str())).collect();
    let mut view = MeasurementStore::new();
    view.insert_all(records)?;
    Ok(view)
}

fn load(cfg: &ProjectConfig, path: &Path) -> Result<(LinguisticModel, Vec<Warning>), PipelineError> {
    let opts = ValidationOptions { cardinality_as_warning: cfg.flags.cardinality_as_warning };
    let model = load_model_with(path, opts)?;
    let warnings = validate_model_with(&model, opts)
        .warnings
        .into_iter()
        .map(|v| Warning { stage: "model".into(), code: v.code.as_str().to_lowercase(), message: v.to_string() })
        .collect();
    Ok((model, warnings))
}

/// Evaluates the object described by `model_path` against `store`.
/// The store is only read.
pub fn run_object(cfg: &ProjectConfig, model_path: &Path, store: &MeasurementStore) -> Result<ObjectReport, PipelineError> {
    let (model, warnings) = load(cfg, model_path)?;
    evaluate(cfg, &model, warnings, store)
}

fn evaluate(
    cfg: &ProjectConfig,
    model: &LinguisticModel,
    warnings: Vec<Warning>,
    store: &MeasurementStore,
) -> Result<ObjectReport, PipelineError> {
    let mut run = Run { cfg, warnings };
    let object = model.object_id.as_str();

    let queries = generate_unchecked(model);
    let ids: BTreeSet<&str> = queries.ids().into_iter().collect();
    let view = restrict(store, object, &ids)?;
    if view.is_empty() {
        return Err(PipelineError::NoData(format!("store holds no records for the queries of {object:?}")));
    }
    let stored: BTreeSet<String> = view.iter().map(|r| r.query_id).collect();
    let unused = ids.len() - stored.len();
    if unused > 0 {
        run.warn("queries", "unmatched_queries", format!("{unused} of {} generated queries have no records", ids.len()));
    }

    let sources: Vec<SourceConfig> = if cfg.sources.is_empty() {
        view.source_ids(object)
            .into_iter()
            .map(|id| SourceConfig { id, discount: crate::evidence::DEFAULT_DISCOUNT })
            .collect()
    } else {
        cfg.sources.clone()
    };

    let params = IndicatorParams {
        normalization: cfg.normalization,
        aggregation: cfg.aggregation,
        scope: cfg.scope,
        options: if cfg.flags.exp_epsilon { NormOptions::EPSILON_ONE } else { NormOptions::default() },
    };
    let window = cfg.window.0..=cfg.window.1;
    let length = f64::from(cfg.window.1 - cfg.window.0);
    let frame = &cfg.frame;
    let target = frame.upper_set(cfg.target_threshold);

    let mut reports = Vec::new();
    let mut nov_bpas = Vec::new();
    let mut dem_bpas = Vec::new();
    let mut imp_bpas = Vec::new();
    let mut imp_sources = Vec::new();

    for src in &sources {
        let build = |indicator, metric| {
            build_series_detailed(&view, object, &src.id, indicator, metric, params, window.clone())
        };
        let (nov, dem): (SeriesDetail, SeriesDetail) =
            match (build(Indicator::Nov, Metric::HitCount), build(Indicator::Dem, cfg.demand_metric)) {
                (Ok(n), Ok(d)) => (n, d),
                (Err(e), _) | (_, Err(e)) => {
                    run.warn("indicators", "no_data", format!("source {}: {e}", src.id));
                    continue;
                }
            };

        let mut cycles = |series: &crate::indicators::IndicatorSeries| match find_local_maxima(series) {
            Ok(c) => Some(c),
            // too short a series cannot show a cycle either
            Err(e) => {
                run.warn("cycles", "no_cycles", format!("source {} {}: {e}", src.id, series.indicator));
                None
            }
        };
        let nov_cycles = cycles(&nov.series);
        let dem_cycles = cycles(&dem.series);

        let imp = match (&nov_cycles, &dem_cycles) {
            (Some(n), Some(d)) => match imp_from_periods(n.delta_t, d.delta_t, length, cfg.flags.imp_variant) {
                Ok(v) => Some(v),
                Err(e) => {
                    run.warn("implementability", "zero_window", format!("source {}: {e}", src.id));
                    None
                }
            },
            _ => None,
        };

        let mut trends = Vec::new();
        for series in [&nov.series, &dem.series] {
            for &degree in &cfg.trend_degrees {
                match fit_trend(series, degree) {
                    Ok(fit) => trends.push(TrendEntry { indicator: series.indicator, fit }),
                    Err(e) => run.warn("trend", "no_trend", format!("source {} {} degree {degree}: {e}", src.id, series.indicator)),
                }
            }
        }

        let mut evidence = |samples: &[f64], label: &str, out: &mut Vec<Bpa>| match bpa_from_samples(samples, frame, src.discount) {
            Ok(b) => out.push(b),
            Err(e) => run.warn("evidence", "no_belief", format!("source {} {label}: {e}", src.id)),
        };
        if let Some(last) = nov.samples.last() {
            evidence(last, "Nov", &mut nov_bpas);
        }
        if let Some(last) = dem.samples.last() {
            evidence(last, "Dem", &mut dem_bpas);
        }
        if let Some(v) = imp {
            evidence(&[v], "Imp", &mut imp_bpas);
            imp_sources.push(src.id.clone());
        }

        reports.push(SourceReport {
            source_id: src.id.clone(),
            discount: src.discount,
            nov: nov.series,
            dem: dem.series,
            nov_cycles,
            dem_cycles,
            imp,
            trends,
        });
    }

    if reports.is_empty() {
        return Err(PipelineError::NoData(format!("no source produced indicator series for {object:?}")));
    }

    let used: Vec<String> = reports.iter().map(|r| r.source_id.clone()).collect();
    let last_values = |pick: fn(&SourceReport) -> &crate::indicators::IndicatorSeries| -> Vec<f64> {
        reports.iter().filter_map(|r| pick(r).last()).map(|p| p.value).collect()
    };
    let nov_crisp = mean(&last_values(|r| &r.nov));
    let dem_crisp = mean(&last_values(|r| &r.dem));
    let imp_values: Vec<f64> = reports.iter().filter_map(|r| r.imp).collect();
    let imp_crisp = mean(&imp_values);

    let nov_belief = run.fuse("Nov", &nov_bpas, target);
    let dem_belief = run.fuse("Dem", &dem_bpas, target);
    let imp_belief = run.fuse("Imp", &imp_bpas, target);

    let index = build_index(&mut run, [nov_crisp, dem_crisp, imp_crisp], [nov_belief, dem_belief, imp_belief], &used);

    Ok(ObjectReport {
        object_id: object.to_string(),
        window: cfg.window,
        query_ids: queries.ids().into_iter().map(String::from).collect(),
        target_intervals: target.indices(),
        sources: reports,
        nov: IndicatorSummary { crisp: nov_crisp, belief: nov_belief, sources: used.clone() },
        dem: IndicatorSummary { crisp: dem_crisp, belief: dem_belief, sources: used.clone() },
        imp: IndicatorSummary { crisp: imp_crisp, belief: imp_belief, sources: imp_sources },
        index,
        warnings: run.warnings,
    })
}

fn build_index(
    run: &mut Run<'_>,
    crisp: [Option<f64>; 3],
    beliefs: [Option<BeliefInterval>; 3],
    sources: &[String],
) -> Option<InnovIndex> {
    let cfg = run.cfg;
    let [Some(nov), Some(dem), imp] = crisp else {
        run.warn("index", "no_index", "novelty or demand is missing");
        return None;
    };
    let partial = imp.is_none();
    let weights = if partial {
        run.warn("index", "partial_index", "implementability unavailable; index uses novelty and demand only");
        match cfg.weights.without_imp() {
            Ok(w) => w,
            Err(e) => {
                run.warn("index", "no_index", e.to_string());
                return None;
            }
        }
    } else {
        cfg.weights
    };
    let crisp = match additive_index(nov, dem, imp.unwrap_or(0.0), &weights) {
        Ok(v) => v,
        Err(e) => {
            run.warn("index", "no_index", e.to_string());
            return None;
        }
    };

    let neutral = BeliefInterval { bel: 1.0, pl: 1.0 };
    let interval = match beliefs {
        [Some(n), Some(d), i] if partial || i.is_some() => {
            match interval_index(n, d, i.unwrap_or(neutral), &weights, IndexOptions { floor: cfg.flags.floor }) {
                Ok(iv) => Some(iv),
                Err(e) => {
                    run.warn("index", "no_interval", format!("interval index: {e}"));
                    None
                }
            }
        }
        _ => None,
    };
    let log_interval = interval.and_then(|iv| log_index(iv).ok());

    Some(InnovIndex {
        crisp,
        interval,
        log_interval,
        weights,
        provenance: Provenance {
            normalization: cfg.normalization.to_string(),
            aggregation: cfg.aggregation.to_string(),
            sources: sources.to_vec(),
        },
        partial,
    })
}

fn open_store(cfg: &ProjectConfig) -> Result<MeasurementStore, PipelineError> {
    cfg.validate()?;
    let dir = cfg.store.as_deref().expect("validated");
    Ok(MeasurementStore::open(dir)?)
}

/// Runs one object. With several models in the project, `object` picks one
/// by id; with a single model it may be omitted.
pub fn run_pipeline(cfg: &ProjectConfig, object: Option<&str>) -> Result<ObjectReport, PipelineError> {
    let store = open_store(cfg)?;
    match (object, cfg.models.as_slice()) {
        (None, [only]) => run_object(cfg, only, &store),
        (None, _) => Err(PipelineError::Config("project lists several models; choose one object or run all".into())),
        (Some(id), models) => {
            for path in models {
                let (model, warnings) = load(cfg, path)?;
                if model.object_id == id {
                    return evaluate(cfg, &model, warnings, &store);
                }
            }
            Err(PipelineError::Config(format!("no model in the project has object id {id:?}")))
        }
    }
}

/// Runs every model in the project concurrently; reports keep the file order.
pub fn run_all(cfg: &ProjectConfig) -> Result<Vec<ObjectReport>, PipelineError> {
    let store = open_store(cfg)?;
    cfg.models.par_iter().map(|m| run_object(cfg, m, &store)).collect()
}
