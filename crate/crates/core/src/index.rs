//! Innovativeness index.
//!
//! The crisp index is the weighted sum `w_nov·Nov + w_dem·Dem + w_imp·Imp`.
//! The interval index raises each indicator's `[Bel, Pl]` interval to its
//! weight endpoint-wise and multiplies the results; its logarithm is the
//! weighted sum of the log-intervals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::BeliefInterval;

pub const WEIGHT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IndexError {
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("indicator value {0} is outside [0, 1]")]
    IndicatorOutOfRange(f64),
    #[error("interval bound {0} is not positive")]
    NonPositiveBound(f64),
    #[error("interval [{0}, {1}] is not ordered")]
    Unordered(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights")]
pub struct Weights {
    pub w_nov: f64,
    pub w_dem: f64,
    pub w_imp: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeights {
    w_nov: f64,
    w_dem: f64,
    w_imp: f64,
}

impl TryFrom<RawWeights> for Weights {
    type Error = IndexError;

    fn try_from(r: RawWeights) -> Result<Self, Self::Error> {
        Weights::new(r.w_nov, r.w_dem, r.w_imp)
    }
}

impl Default for Weights {
    fn default() -> Self {
        Self { w_nov: 1.0 / 3.0, w_dem: 1.0 / 3.0, w_imp: 1.0 / 3.0 }
    }
}

impl Weights {
    pub fn new(w_nov: f64, w_dem: f64, w_imp: f64) -> Result<Self, IndexError> {
        let w = Self { w_nov, w_dem, w_imp };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), IndexError> {
        let ws = self.as_array();
        if ws.iter().any(|w| !(w.is_finite() && (0.0..=1.0).contains(w))) {
            return Err(IndexError::InvalidWeights(format!("{ws:?} must each lie in [0, 1]")));
        }
        let sum: f64 = ws.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(IndexError::InvalidWeights(format!("weights sum to {sum}, expected 1")));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.w_nov, self.w_dem, self.w_imp]
    }

    /// Weights over novelty and demand only, rescaled to sum to one.
    pub fn without_imp(&self) -> Result<Self, IndexError> {
        let rest = self.w_nov + self.w_dem;
        if rest <= 0.0 {
            return Err(IndexError::InvalidWeights("no weight left once implementability is dropped".into()));
        }
        Ok(Self { w_nov: self.w_nov / rest, w_dem: self.w_dem / rest, w_imp: 0.0 })
    }
}

fn check_unit(v: f64) -> Result<f64, IndexError> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(IndexError::IndicatorOutOfRange(v))
    }
}

pub fn additive_index(nov: f64, dem: f64, imp: f64, w: &Weights) -> Result<f64, IndexError> {
    w.validate()?;
    let (nov, dem, imp) = (check_unit(nov)?, check_unit(dem)?, check_unit(imp)?);
    Ok((w.w_nov * nov + w.w_dem * dem + w.w_imp * imp).clamp(0.0, 1.0))
}

/// A closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, IndexError> {
        if !(lo <= hi) {
            return Err(IndexError::Unordered(lo, hi));
        }
        Ok(Self { lo, hi })
    }

    /// `sqrt(lo·hi)`; ranks intervals consistently with the arithmetic
    /// midpoint of their logarithms.
    pub fn geometric_midpoint(&self) -> f64 {
        (self.lo * self.hi).sqrt()
    }

    pub fn midpoint(&self) -> f64 {
        (self.lo + self.hi) / 2.0
    }
}

impl From<BeliefInterval> for Interval {
    fn from(b: BeliefInterval) -> Self {
        Self { lo: b.bel, hi: b.pl }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexOptions {
    /// Lower bounds below this are raised to it before exponentiation;
    /// `None` makes a zero bound an error.
    pub floor: Option<f64>,
}

impl Default for IndexOptions {
    fn default() -> Self {
        Self { floor: Some(DEFAULT_FLOOR) }
    }
}

fn floored(iv: BeliefInterval, options: IndexOptions) -> Result<Interval, IndexError> {
    let (mut lo, mut hi) = (iv.bel, iv.pl);
    if let Some(eps) = options.floor {
        lo = lo.max(eps);
        hi = hi.max(eps);
    }
    if !(lo > 0.0) {
        return Err(IndexError::NonPositiveBound(lo));
    }
    Interval::new(lo, hi)
}

/// Endpoint-wise weighted geometric product of the indicator intervals.
pub fn interval_index(
    nov: BeliefInterval,
    dem: BeliefInterval,
    imp: BeliefInterval,
    w: &Weights,
    options: IndexOptions,
) -> Result<Interval, IndexError> {
    w.validate()?;
    let parts = [floored(nov, options)?, floored(dem, options)?, floored(imp, options)?];
    let mut lo = 1.0;
    let mut hi = 1.0;
    for (iv, wi) in parts.iter().zip(w.as_array()) {
        lo *= iv.lo.powf(wi);
        hi *= iv.hi.powf(wi);
    }
    Interval::new(lo, hi)
}

/// Natural logarithm of both bounds.
pub fn log_index(iv: Interval) -> Result<Interval, IndexError> {
    if !(iv.lo > 0.0) {
        return Err(IndexError::NonPositiveBound(iv.lo));
    }
    Interval::new(iv.lo.ln(), iv.hi.ln())
}

/// `Σ w_i·[ln lo_i, ln hi_i]`, computed directly from the indicator intervals.
pub fn log_index_additive(
    nov: BeliefInterval,
    dem: BeliefInterval,
    imp: BeliefInterval,
    w: &Weights,
    options: IndexOptions,
) -> Result<Interval, IndexError> {
    w.validate()?;
    let parts = [floored(nov, options)?, floored(dem, options)?, floored(imp, options)?];
    let mut lo = 0.0;
    let mut hi = 0.0;
    for (iv, wi) in parts.iter().zip(w.as_array()) {
        lo += wi * iv.lo.ln();
        hi += wi * iv.hi.ln();
    }
    Interval::new(lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub normalization: String,
    pub aggregation: String,
    pub sources: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnovIndex {
    pub crisp: f64,
    pub interval: Option<Interval>,
    pub log_interval: Option<Interval>,
    /// Weights actually applied (renormalized when implementability is missing).
    pub weights: Weights,
    pub provenance: Provenance,
    pub partial: bool,
}
