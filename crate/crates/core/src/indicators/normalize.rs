use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::IndicatorError;

/// Maps raw measurements onto `[0, 1]`.
///
/// * `Linear`: `(F - min F) / (max F - min F)`, all zeros when `max F = min F`.
/// * `Exponential`: `1 - exp(1 - F / min F)`; requires `min F > 0` unless a
///   substitute minimum is configured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationKind {
    Linear,
    Exponential,
}

impl fmt::Display for NormalizationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormalizationKind::Linear => "linear",
            NormalizationKind::Exponential => "exponential",
        })
    }
}

impl FromStr for NormalizationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear" => Ok(NormalizationKind::Linear),
            "exponential" => Ok(NormalizationKind::Exponential),
            _ => Err(format!("unknown normalization {s:?} (expected linear or exponential)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationKind {
    Mean,
    /// Lower-middle element for even counts.
    Median,
}

impl fmt::Display for AggregationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggregationKind::Mean => "mean",
            AggregationKind::Median => "median",
        })
    }
}

impl FromStr for AggregationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mean" => Ok(AggregationKind::Mean),
            "median" => Ok(AggregationKind::Median),
            _ => Err(format!("unknown aggregation {s:?} (expected mean or median)")),
        }
    }
}

impl AggregationKind {
    pub fn apply(&self, values: &[f64]) -> Result<f64, IndicatorError> {
        if values.is_empty() {
            return Err(IndicatorError::EmptyInput);
        }
        Ok(match self {
            AggregationKind::Mean => values.iter().sum::<f64>() / values.len() as f64,
            AggregationKind::Median => {
                let mut sorted = values.to_vec();
                sorted.sort_by(f64::total_cmp);
                sorted[(sorted.len() - 1) / 2]
            }
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NormOptions {
    /// Minimum substituted for a zero `min F` under exponential normalization.
    /// `None` makes a zero minimum an error.
    pub zero_min_epsilon: Option<f64>,
}

impl NormOptions {
    pub const EPSILON_ONE: NormOptions = NormOptions { zero_min_epsilon: Some(1.0) };
}

/// A normalization function with its reference bounds fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    pub kind: NormalizationKind,
    pub min: f64,
    pub max: f64,
}

impl Normalizer {
    pub fn fit(values: &[f64], kind: NormalizationKind, options: NormOptions) -> Result<Self, IndicatorError> {
        if values.is_empty() {
            return Err(IndicatorError::EmptyInput);
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in values {
            if !(v.is_finite() && v >= 0.0) {
                return Err(IndicatorError::InvalidValue(v));
            }
            min = min.min(v);
            max = max.max(v);
        }
        if kind == NormalizationKind::Exponential && min == 0.0 {
            match options.zero_min_epsilon {
                Some(eps) if eps > 0.0 => min = eps,
                _ => return Err(IndicatorError::ZeroMin),
            }
        }
        Ok(Self { kind, min, max })
    }

    pub fn apply(&self, v: f64) -> f64 {
        let y = match self.kind {
            NormalizationKind::Linear => {
                let spread = self.max - self.min;
                if spread == 0.0 {
                    return 0.0;
                }
                (v - self.min) / spread
            }
            NormalizationKind::Exponential => -(1.0 - v / self.min).exp_m1(),
        };
        y.clamp(0.0, 1.0)
    }

    pub fn apply_all(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.apply(v)).collect()
    }
}

pub fn normalize(values: &[f64], kind: NormalizationKind) -> Result<Vec<f64>, IndicatorError> {
    normalize_with(values, kind, NormOptions::default())
}

pub fn normalize_with(values: &[f64], kind: NormalizationKind, options: NormOptions) -> Result<Vec<f64>, IndicatorError> {
    Ok(Normalizer::fit(values, kind, options)?.apply_all(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn linear_example() {
        let out = normalize(&[2.0, 4.0, 8.0], NormalizationKind::Linear).unwrap();
        assert_abs_diff_eq!(out[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out[1], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_spread_is_zero() {
        assert_eq!(normalize(&[5.0, 5.0, 5.0], NormalizationKind::Linear).unwrap(), [0.0, 0.0, 0.0]);
        assert_eq!(normalize(&[7.0], NormalizationKind::Exponential).unwrap(), [0.0]);
    }

    #[test]
    fn exponential_example() {
        let out = normalize(&[1.0, 2.0, 3.0], NormalizationKind::Exponential).unwrap();
        // direct evaluation of 1 - exp(1 - F/minF)
        let direct: Vec<f64> = [1.0f64, 2.0, 3.0].iter().map(|f| 1.0 - (1.0 - f / 1.0).exp()).collect();
        for (a, b) in out.iter().zip(&direct) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(out[1], 0.63212, epsilon = 1e-5);
        assert_abs_diff_eq!(out[2], 0.86466, epsilon = 1e-5);
    }

    #[test]
    fn exponential_zero_min() {
        assert_eq!(normalize(&[0.0, 2.0], NormalizationKind::Exponential), Err(IndicatorError::ZeroMin));
        let out = normalize_with(&[0.0, 1.0, 2.0], NormalizationKind::Exponential, NormOptions::EPSILON_ONE).unwrap();
        assert_eq!(out[0], 0.0);
        assert_eq!(out[1], 0.0);
        assert_abs_diff_eq!(out[2], 1.0 - (-1.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        assert_eq!(normalize(&[], NormalizationKind::Linear), Err(IndicatorError::EmptyInput));
        assert!(matches!(normalize(&[1.0, -2.0], NormalizationKind::Linear), Err(IndicatorError::InvalidValue(_))));
        assert!(matches!(normalize(&[f64::NAN], NormalizationKind::Linear), Err(IndicatorError::InvalidValue(_))));
    }

    #[test]
    fn median_takes_lower_middle() {
        assert_eq!(AggregationKind::Median.apply(&[4.0, 1.0, 3.0, 2.0]).unwrap(), 2.0);
        assert_eq!(AggregationKind::Median.apply(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(AggregationKind::Mean.apply(&[1.0, 2.0]).unwrap(), 1.5);
        assert_eq!(AggregationKind::Mean.apply(&[]), Err(IndicatorError::EmptyInput));
    }

    proptest! {
        #[test]
        fn linear_is_affine_invariant(
            values in prop::collection::vec(0.0f64..1e4, 1..30),
            a in 0.01f64..100.0,
            b in 0.0f64..1e3,
        ) {
            let base = normalize(&values, NormalizationKind::Linear).unwrap();
            let scaled: Vec<f64> = values.iter().map(|v| a * v + b).collect();
            let other = normalize(&scaled, NormalizationKind::Linear).unwrap();
            for (x, y) in base.iter().zip(&other) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn exponential_is_monotone(values in prop::collection::vec(0.1f64..100.0, 2..30)) {
            let out = normalize(&values, NormalizationKind::Exponential).unwrap();
            for i in 0..values.len() {
                prop_assert!((0.0..=1.0).contains(&out[i]));
                for j in 0..values.len() {
                    if values[i] < values[j] {
                        prop_assert!(out[i] <= out[j]);
                    }
                }
            }
        }
    }
}
