//! Innovativeness assessment of technology objects from search-measurement
//! data: linguistic models, query generation, indicator series, belief-function
//! fusion and a composite index.

pub mod analysis;
pub mod evidence;
pub mod index;
pub mod indicators;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod querygen;

pub use analysis::{compare_groups, fit_trend, AnalysisError, GroupComparison, TrendFit};
pub use evidence::{bel_pl, bpa_from_samples, combine, combine_all, BeliefInterval, Bpa, EvidenceError, FocalSet, Frame};
pub use index::{additive_index, interval_index, log_index, IndexError, InnovIndex, Interval, Weights};
pub use indicators::{
    compute_dem, compute_imp, compute_nov, AggregationKind, IndicatorError, IndicatorSeries, NormalizationKind,
};
pub use ingest::{IngestError, MeasurementRecord, MeasurementStore, Metric};
pub use model::{load_model, LinguisticModel, ModelError};
pub use querygen::{generate_queries, parse_query, render_query, Dialect, QueryError, QueryExpr, QuerySet};
pub use pipeline::{run_all, run_pipeline, ObjectReport, PipelineError, ProjectConfig};
