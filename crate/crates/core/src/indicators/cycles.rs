use serde::{Deserialize, Serialize};

use super::{IndicatorError, IndicatorSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleStats {
    pub maxima_years: Vec<i32>,
    /// Mean distance in years between consecutive maxima.
    pub delta_t: f64,
}

/// Indices of interior local maxima. A point is a maximum when it is strictly
/// above both neighbours; a run of equal values strictly above the points on
/// either side counts once, at its first index. Endpoints never count.
pub fn local_maxima_indices(values: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = values.len();
    let mut i = 1;
    while i + 1 < n {
        if values[i] <= values[i - 1] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < n && values[i + 1] == values[start] {
            i += 1;
        }
        if i + 1 < n && values[i + 1] < values[start] {
            out.push(start);
        }
        i += 1;
    }
    out
}

pub fn find_local_maxima(series: &IndicatorSeries) -> Result<CycleStats, IndicatorError> {
    if series.points.len() < 3 {
        return Err(IndicatorError::TooFewPoints { needed: 3, found: series.points.len() });
    }
    let values: Vec<f64> = series.points.iter().map(|p| p.value).collect();
    let maxima_years: Vec<i32> = local_maxima_indices(&values).into_iter().map(|i| series.points[i].year).collect();
    if maxima_years.len() < 2 {
        return Err(IndicatorError::NoCycles { maxima: maxima_years.len() });
    }
    let gaps: Vec<f64> = maxima_years.windows(2).map(|w| f64::from(w[1] - w[0])).collect();
    let delta_t = gaps.iter().sum::<f64>() / gaps.len() as f64;
    Ok(CycleStats { maxima_years, delta_t })
}
