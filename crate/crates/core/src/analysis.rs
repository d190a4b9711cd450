//! Trend lines over indicator series and group comparisons.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indicators::IndicatorSeries;

pub const SLOPE_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_POLY_DEGREE: usize = 4;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AnalysisError {
    #[error("degree must be at least 1")]
    InvalidDegree,
    #[error("too few points: degree {degree} needs {needed}, found {found}")]
    TooFewPoints { degree: usize, needed: usize, found: usize },
    #[error("normal equations are singular")]
    SingularSystem,
    #[error("empty group")]
    EmptyGroup,
    #[error("baseline group mean is not positive")]
    ZeroBaseline,
    #[error("non-finite input")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub degree: usize,
    /// Ascending powers of `t`.
    pub coefficients: Vec<f64>,
    /// Ascending powers of `t - center`; better conditioned for evaluation.
    pub centered_coefficients: Vec<f64>,
    pub center: f64,
    pub rss: f64,
    /// Sign of the linear coefficient, for degree-1 fits only.
    pub slope_sign: Option<i8>,
}

impl TrendFit {
    pub fn evaluate(&self, t: f64) -> f64 {
        let x = t - self.center;
        self.centered_coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Fitted values at the given years, for plotting.
    pub fn sample(&self, years: &[i32]) -> Vec<(i32, f64)> {
        years.iter().map(|&y| (y, self.evaluate(f64::from(y)))).collect()
    }
}

/// Solves `a·x = b` in place by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>, AnalysisError> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Err(AnalysisError::SingularSystem);
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        if a[pivot][col].abs() <= 1e-12 * scale {
            return Err(AnalysisError::SingularSystem);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Ok(x)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Least-squares polynomial of `degree` through `(ts, ys)`, solved in the
/// variable `(t - center) / spread` and reported in both the raw and the
/// centered basis.
pub fn fit_polynomial(ts: &[f64], ys: &[f64], degree: usize, center: f64) -> Result<TrendFit, AnalysisError> {
    if degree == 0 {
        return Err(AnalysisError::InvalidDegree);
    }
    let needed = degree + 1;
    if ts.len() < needed || ys.len() != ts.len() {
        return Err(AnalysisError::TooFewPoints { degree, needed, found: ts.len().min(ys.len()) });
    }
    if ts.iter().chain(ys).any(|v| !v.is_finite()) || !center.is_finite() {
        return Err(AnalysisError::NonFinite);
    }

    let spread = ts.iter().fold(0.0f64, |m, t| m.max((t - center).abs()));
    let spread = if spread > 0.0 { spread } else { 1.0 };
    let xs: Vec<f64> = ts.iter().map(|t| (t - center) / spread).collect();

    // normal equations: (VᵀV) c = Vᵀy with Vandermonde V
    let mut ata = vec![vec![0.0; needed]; needed];
    let mut aty = vec![0.0; needed];
    for (&x, &y) in xs.iter().zip(ys) {
        let powers: Vec<f64> = (0..needed).scan(1.0, |p, _| { let v = *p; *p *= x; Some(v) }).collect();
        for i in 0..needed {
            aty[i] += powers[i] * y;
            for j in 0..needed {
                ata[i][j] += powers[i] * powers[j];
            }
        }
    }
    let scaled = solve(ata, aty)?;

    let centered: Vec<f64> = scaled.iter().enumerate().map(|(k, c)| c / spread.powi(k as i32)).collect();
    // expand Σ c_k (t - center)^k into powers of t
    let mut raw = vec![0.0; needed];
    for (k, &c) in centered.iter().enumerate() {
        for j in 0..=k {
            raw[j] += c * binomial(k, j) * (-center).powi((k - j) as i32);
        }
    }

    let mut fit = TrendFit {
        degree,
        coefficients: raw,
        centered_coefficients: centered,
        center,
        rss: 0.0,
        slope_sign: None,
    };
    fit.rss = ts.iter().zip(ys).map(|(&t, &y)| (y - fit.evaluate(t)).powi(2)).sum();
    if degree == 1 {
        let slope = fit.centered_coefficients[1];
        fit.slope_sign = Some(if slope > SLOPE_TOLERANCE {
            1
        } else if slope < -SLOPE_TOLERANCE {
            -1
        } else {
            0
        });
    }
    Ok(fit)
}

/// Trend of a yearly series, with years centered at the window midpoint.
pub fn fit_trend(series: &IndicatorSeries, degree: usize) -> Result<TrendFit, AnalysisError> {
    let ts: Vec<f64> = series.points.iter().map(|p| f64::from(p.year)).collect();
    let ys: Vec<f64> = series.points.iter().map(|p| p.value).collect();
    let center = (f64::from(series.window.0) + f64::from(series.window.1)) / 2.0;
    fit_polynomial(&ts, &ys, degree, center)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub group_a_mean: f64,
    pub group_b_mean: f64,
    /// `(a - b) / b · 100`.
    pub excess_percent: f64,
}

pub fn compare_groups(group_a: &[f64], group_b: &[f64]) -> Result<GroupComparison, AnalysisError> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(AnalysisError::EmptyGroup);
    }
    if group_a.iter().chain(group_b).any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let mean = |g: &[f64]| g.iter().sum::<f64>() / g.len() as f64;
    let (a, b) = (mean(group_a), mean(group_b));
    if b <= 0.0 {
        return Err(AnalysisError::ZeroBaseline);
    }
    Ok(GroupComparison { group_a_mean: a, group_b_mean: b, excess_percent: (a - b) / b * 100.0 })
}
