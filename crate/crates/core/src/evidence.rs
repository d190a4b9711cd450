//! Dempster-Shafer fusion over a partition of `[0, 1]`.
//!
//! The frame of discernment is a set of `K` value bands `A_1..A_K`
//! (half-open `[a, b)`, the last one closed). Focal elements are subsets of
//! the bands, stored as bit masks, so `K` is limited to 64.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MASS_TOLERANCE: f64 = 1e-9;
pub const CONFLICT_LIMIT: f64 = 1.0 - 1e-12;
pub const DEFAULT_DISCOUNT: f64 = 0.1;
pub const DEFAULT_BANDS: usize = 5;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvidenceError {
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("empty input")]
    EmptyInput,
    #[error("value {0} is outside [0, 1]")]
    ValueOutOfRange(f64),
    #[error("discount {0} is outside [0, 1]")]
    InvalidDiscount(f64),
    #[error("mass functions are defined on different frames")]
    FrameMismatch,
    #[error("total conflict (K = {0})")]
    TotalConflict(f64),
    #[error("empty set")]
    EmptySet,
    #[error("invalid mass assignment: {0}")]
    InvalidMass(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Frame {
    cut_points: Vec<f64>,
}

impl Frame {
    pub fn new(cut_points: Vec<f64>) -> Result<Self, EvidenceError> {
        let bad = |m: &str| Err(EvidenceError::InvalidFrame(m.to_string()));
        if cut_points.len() < 2 {
            return bad("need at least two cut points");
        }
        if cut_points.len() - 1 > 64 {
            return bad("at most 64 intervals are supported");
        }
        if cut_points[0] != 0.0 || *cut_points.last().unwrap() != 1.0 {
            return bad("cut points must start at 0 and end at 1");
        }
        if cut_points.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("cut points must be strictly increasing");
        }
        Ok(Self { cut_points })
    }

    /// `k` equal-width intervals.
    pub fn uniform(k: usize) -> Result<Self, EvidenceError> {
        if k == 0 {
            return Err(EvidenceError::InvalidFrame("need at least one interval".into()));
        }
        let mut cuts: Vec<f64> = (0..=k).map(|i| i as f64 / k as f64).collect();
        cuts[k] = 1.0;
        Self::new(cuts)
    }

    pub fn cut_points(&self) -> &[f64] {
        &self.cut_points
    }

    pub fn len(&self) -> usize {
        self.cut_points.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Bounds of interval `k` (0-based).
    pub fn interval(&self, k: usize) -> (f64, f64) {
        (self.cut_points[k], self.cut_points[k + 1])
    }

    /// Index of the interval holding `v`.
    pub fn locate(&self, v: f64) -> Result<usize, EvidenceError> {
        if !(0.0..=1.0).contains(&v) {
            return Err(EvidenceError::ValueOutOfRange(v));
        }
        // number of interior cut points <= v
        let interior = &self.cut_points[1..self.cut_points.len() - 1];
        Ok(interior.partition_point(|&c| c <= v))
    }

    pub fn theta(&self) -> FocalSet {
        FocalSet(if self.len() == 64 { u64::MAX } else { (1u64 << self.len()) - 1 })
    }

    /// Intervals whose midpoint is at least `threshold`.
    pub fn upper_set(&self, threshold: f64) -> FocalSet {
        FocalSet::from_indices(
            (0..self.len()).filter(|&k| {
                let (a, b) = self.interval(k);
                (a + b) / 2.0 >= threshold
            }),
        )
    }
}

impl TryFrom<Vec<f64>> for Frame {
    type Error = EvidenceError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Frame::new(v)
    }
}

impl From<Frame> for Vec<f64> {
    fn from(f: Frame) -> Self {
        f.cut_points
    }
}

impl Default for Frame {
    fn default() -> Self {
        Frame::uniform(DEFAULT_BANDS).expect("uniform frame")
    }
}

/// A set of interval indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FocalSet(pub u64);

impl FocalSet {
    pub fn singleton(k: usize) -> Self {
        FocalSet(1u64 << k)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        FocalSet(indices.into_iter().fold(0, |acc, k| acc | (1u64 << k)))
    }

    pub fn indices(&self) -> Vec<usize> {
        (0..64).filter(|&k| self.0 & (1u64 << k) != 0).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn intersect(&self, other: FocalSet) -> FocalSet {
        FocalSet(self.0 & other.0)
    }

    pub fn is_subset_of(&self, other: FocalSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(&self, other: FocalSet) -> bool {
        self.0 & other.0 != 0
    }
}

/// A mass function over the subsets of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Bpa {
    frame: Frame,
    masses: BTreeMap<FocalSet, f64>,
}

impl Bpa {
    /// Validates and builds a mass function. Zero masses are dropped.
    pub fn new(frame: Frame, masses: impl IntoIterator<Item = (FocalSet, f64)>) -> Result<Self, EvidenceError> {
        let theta = frame.theta();
        let mut map = BTreeMap::new();
        let mut total = 0.0;
        for (set, m) in masses {
            if set.is_empty() || !set.is_subset_of(theta) {
                return Err(EvidenceError::InvalidMass(format!("focal element {:?} is not a non-empty subset of the frame", set.indices())));
            }
            if !(m.is_finite() && m >= 0.0) {
                return Err(EvidenceError::InvalidMass(format!("mass {m} is negative or not finite")));
            }
            total += m;
            if m > 0.0 {
                *map.entry(set).or_insert(0.0) += m;
            }
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(EvidenceError::InvalidMass(format!("masses sum to {total}")));
        }
        Ok(Self { frame, masses: map })
    }

    /// Total ignorance: all mass on the whole frame.
    pub fn vacuous(frame: Frame) -> Self {
        let theta = frame.theta();
        Self { frame, masses: BTreeMap::from([(theta, 1.0)]) }
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn mass(&self, set: FocalSet) -> f64 {
        self.masses.get(&set).copied().unwrap_or(0.0)
    }

    pub fn focal_elements(&self) -> impl Iterator<Item = (FocalSet, f64)> + '_ {
        self.masses.iter().map(|(&s, &m)| (s, m))
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.values().sum()
    }

    pub fn is_bayesian(&self) -> bool {
        self.masses.keys().all(|s| s.0.count_ones() == 1)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&BpaFile::from(self)).expect("bpa serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, EvidenceError> {
        let file: BpaFile = serde_json::from_str(text).map_err(|e| EvidenceError::InvalidMass(e.to_string()))?;
        file.try_into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FocalMass {
    pub focal: Vec<usize>,
    pub mass: f64,
}

/// Exchange format: `{"frame": [cut points], "masses": [{"focal": [indices], "mass": m}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BpaFile {
    pub frame: Vec<f64>,
    pub masses: Vec<FocalMass>,
}

impl From<&Bpa> for BpaFile {
    fn from(b: &Bpa) -> Self {
        Self {
            frame: b.frame.cut_points.clone(),
            masses: b.focal_elements().map(|(s, mass)| FocalMass { focal: s.indices(), mass }).collect(),
        }
    }
}

impl TryFrom<BpaFile> for Bpa {
    type Error = EvidenceError;

    fn try_from(f: BpaFile) -> Result<Self, Self::Error> {
        let frame = Frame::new(f.frame)?;
        let k = frame.len();
        let mut masses = Vec::with_capacity(f.masses.len());
        for fm in f.masses {
            if let Some(&bad) = fm.focal.iter().find(|&&i| i >= k) {
                return Err(EvidenceError::InvalidMass(format!("interval index {bad} out of range")));
            }
            masses.push((FocalSet::from_indices(fm.focal), fm.mass));
        }
        Bpa::new(frame, masses)
    }
}

/// Histogram of `values` over the frame's intervals, discounted towards the
/// whole frame: `m(A_k) = (1 - d)·share_k`, `m(Θ) = d`.
pub fn bpa_from_samples(values: &[f64], frame: &Frame, discount: f64) -> Result<Bpa, EvidenceError> {
    if values.is_empty() {
        return Err(EvidenceError::EmptyInput);
    }
    if !(0.0..=1.0).contains(&discount) {
        return Err(EvidenceError::InvalidDiscount(discount));
    }
    let mut counts = vec![0usize; frame.len()];
    for &v in values {
        counts[frame.locate(v)?] += 1;
    }
    let n = values.len() as f64;
    let mut masses: Vec<(FocalSet, f64)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| (FocalSet::singleton(k), (1.0 - discount) * c as f64 / n))
        .collect();
    masses.push((frame.theta(), discount));
    Bpa::new(frame.clone(), masses)
}

/// Conflict mass `K`: total product mass of disjoint focal pairs.
pub fn conflict(m1: &Bpa, m2: &Bpa) -> Result<f64, EvidenceError> {
    if m1.frame != m2.frame {
        return Err(EvidenceError::FrameMismatch);
    }
    let mut k = 0.0;
    for (b, mb) in m1.focal_elements() {
        for (c, mc) in m2.focal_elements() {
            if !b.intersects(c) {
                k += mb * mc;
            }
        }
    }
    Ok(k)
}

/// Dempster's rule of combination.
pub fn combine(m1: &Bpa, m2: &Bpa) -> Result<Bpa, EvidenceError> {
    if m1.frame != m2.frame {
        return Err(EvidenceError::FrameMismatch);
    }
    let mut joint: BTreeMap<FocalSet, f64> = BTreeMap::new();
    let mut k = 0.0;
    for (b, mb) in m1.focal_elements() {
        for (c, mc) in m2.focal_elements() {
            let a = b.intersect(c);
            if a.is_empty() {
                k += mb * mc;
            } else {
                *joint.entry(a).or_insert(0.0) += mb * mc;
            }
        }
    }
    if k >= CONFLICT_LIMIT || joint.is_empty() {
        return Err(EvidenceError::TotalConflict(k));
    }
    // normalize by the retained mass rather than 1 - K so rounding in K does
    // not leak into the total
    let retained: f64 = joint.values().sum();
    for m in joint.values_mut() {
        *m /= retained;
    }
    Ok(Bpa { frame: m1.frame.clone(), masses: joint })
}

/// Left fold of [`combine`]: the first two sources form a combined source,
/// which is then combined with the next one, and so on.
pub fn combine_all(bpas: &[Bpa]) -> Result<Bpa, EvidenceError> {
    let (first, rest) = bpas.split_first().ok_or(EvidenceError::EmptyInput)?;
    rest.iter().try_fold(first.clone(), |acc, m| combine(&acc, m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefInterval {
    pub bel: f64,
    pub pl: f64,
}

impl BeliefInterval {
    pub fn new(bel: f64, pl: f64) -> Result<Self, EvidenceError> {
        if !(0.0 <= bel && bel <= pl && pl <= 1.0) {
            return Err(EvidenceError::InvalidMass(format!("[{bel}, {pl}] is not a sub-interval of [0, 1]")));
        }
        Ok(Self { bel, pl })
    }

    pub fn width(&self) -> f64 {
        self.pl - self.bel
    }
}

/// Belief and plausibility of the hypothesis "the value lies in `set`".
pub fn bel_pl(m: &Bpa, set: FocalSet) -> Result<BeliefInterval, EvidenceError> {
    if set.is_empty() {
        return Err(EvidenceError::EmptySet);
    }
    if !set.is_subset_of(m.frame.theta()) {
        return Err(EvidenceError::InvalidMass(format!("set {:?} exceeds the frame", set.indices())));
    }
    let mut bel = 0.0;
    let mut pl = 0.0;
    for (f, mass) in m.focal_elements() {
        if f.is_subset_of(set) {
            bel += mass;
        }
        if f.intersects(set) {
            pl += mass;
        }
    }
    // rounding can push the sums a hair past 1 or bel a hair past pl
    let pl = pl.min(1.0);
    Ok(BeliefInterval { bel: bel.min(pl), pl })
}
