use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::evidence::{Frame, DEFAULT_DISCOUNT};
use crate::index::{Weights, DEFAULT_FLOOR};
use crate::indicators::{AggregationKind, ImpVariant, NormScope, NormalizationKind};
use crate::ingest::Metric;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub id: String,
    #[serde(default = "default_discount")]
    pub discount: f64,
}

fn default_discount() -> f64 {
    DEFAULT_DISCOUNT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Flags {
    /// Substitute a minimum of 1 when exponential normalization meets a zero.
    pub exp_epsilon: bool,
    pub imp_variant: ImpVariant,
    /// Floor for zero lower bounds in the interval index; `null` disables it.
    pub floor: Option<f64>,
    pub cardinality_as_warning: bool,
}

impl Default for Flags {
    fn default() -> Self {
        Self { exp_epsilon: false, imp_variant: ImpVariant::Averaged, floor: Some(DEFAULT_FLOOR), cardinality_as_warning: false }
    }
}

/// Project file. Relative paths are resolved against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    /// One model file per evaluated object.
    pub models: Vec<PathBuf>,
    #[serde(default)]
    pub store: Option<PathBuf>,
    /// Inclusive `[t_0, t_m]`.
    pub window: (i32, i32),
    /// Empty means every source found in the store for the object.
    #[serde(default)]
    pub sources: Vec<SourceConfig>,
    #[serde(default = "default_normalization")]
    pub normalization: NormalizationKind,
    #[serde(default = "default_aggregation")]
    pub aggregation: AggregationKind,
    #[serde(default)]
    pub scope: NormScope,
    #[serde(default = "default_demand_metric")]
    pub demand_metric: Metric,
    #[serde(default)]
    pub frame: Frame,
    /// Intervals with midpoint at or above this form the target hypothesis.
    #[serde(default = "default_target")]
    pub target_threshold: f64,
    #[serde(default)]
    pub weights: Weights,
    #[serde(default = "default_trend_degrees")]
    pub trend_degrees: Vec<usize>,
    #[serde(default)]
    pub flags: Flags,
}

fn default_normalization() -> NormalizationKind {
    NormalizationKind::Linear
}

fn default_aggregation() -> AggregationKind {
    AggregationKind::Mean
}

fn default_demand_metric() -> Metric {
    Metric::AccessFrequency
}

fn default_target() -> f64 {
    0.5
}

fn default_trend_degrees() -> Vec<usize> {
    vec![1, 4]
}

/// Command-line values that take precedence over the project file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub store: Option<PathBuf>,
    pub window: Option<(i32, i32)>,
    pub normalization: Option<NormalizationKind>,
    pub aggregation: Option<AggregationKind>,
    pub weights: Option<Weights>,
    pub imp_variant: Option<ImpVariant>,
    pub exp_epsilon: Option<bool>,
}

/// Parses `t0:tm`.
pub fn parse_window(s: &str) -> Result<(i32, i32), PipelineError> {
    let bad = || PipelineError::Config(format!("window {s:?} must look like 2000:2023"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: i32 = a.trim().parse().map_err(|_| bad())?;
    let b: i32 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(PipelineError::Config(format!("window {s:?} is empty")));
    }
    Ok((a, b))
}

impl ProjectConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Config(format!("project file: {e}")))
    }

    /// Reads a project file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for m in &mut cfg.models {
            *m = base.join(&*m);
        }
        if let Some(s) = &cfg.store {
            cfg.store = Some(base.join(s));
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(v) = o.store {
            self.store = Some(v);
        }
        if let Some(v) = o.window {
            self.window = v;
        }
        if let Some(v) = o.normalization {
            self.normalization = v;
        }
        if let Some(v) = o.aggregation {
            self.aggregation = v;
        }
        if let Some(v) = o.weights {
            self.weights = v;
        }
        if let Some(v) = o.imp_variant {
            self.flags.imp_variant = v;
        }
        if let Some(v) = o.exp_epsilon {
            self.flags.exp_epsilon = v;
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let cfg = |m: String| Err(PipelineError::Config(m));
        if self.models.is_empty() {
            return cfg("no model files listed".into());
        }
        for m in &self.models {
            if !m.is_file() {
                return cfg(format!("model file {} does not exist", m.display()));
            }
        }
        match &self.store {
            None => return cfg("no store given (set it in the project file or INNODEX_STORE)".into()),
            Some(s) if !s.is_dir() => return cfg(format!("store directory {} does not exist", s.display())),
            _ => {}
        }
        if self.window.0 > self.window.1 {
            return cfg(format!("window {:?} is empty", self.window));
        }
        self.weights.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        for s in &self.sources {
            if !(0.0..=1.0).contains(&s.discount) {
                return cfg(format!("source {}: discount {} outside [0, 1]", s.id, s.discount));
            }
        }
        if self.trend_degrees.contains(&0) {
            return cfg("trend degrees must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.target_threshold) {
            return cfg(format!("target threshold {} outside [0, 1]", self.target_threshold));
        }
        if self.frame.upper_set(self.target_threshold).is_empty() {
            return cfg(format!("no frame interval has midpoint at or above {}", self.target_threshold));
        }
        if let Some(f) = self.flags.floor {
            if !(f > 0.0 && f < 1.0) {
                return cfg(format!("floor {f} must lie in (0, 1)"));
            }
        }
        if self.demand_metric == Metric::HitCount {
            return cfg("demand metric cannot be hit_count".into());
        }
        Ok(())
    }
}
