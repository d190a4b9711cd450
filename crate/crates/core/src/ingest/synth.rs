//! Synthetic product-lifecycle measurements.
//!
//! For year offset `s = t - t_0` and per-query jitter `j_k`:
//!
//! ```text
//! cycle(s)  = cos(2π s / P) + noise_level · ε      (ε ~ N(0, 1), drawn per record)
//! demand    = j_k · (baseline + amplitude · cycle(s))
//! hit_count = j_k · 10·baseline · (1 + growth_rate · s) · (1 + (amplitude / baseline) · cycle(s))
//! ```
//!
//! Demand peaks every `P` years starting at `t_0`. Hit counts grow with the
//! accumulated corpus and dip half a period after each demand peak, so the
//! derived novelty trends down and peaks in antiphase with demand. All values
//! are rounded to whole counts. Noise rides on the cyclic component only, so
//! `amplitude = 0` yields perfectly flat demand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{IngestError, MeasurementRecord, Metric};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifecycleScenario {
    pub object_id: String,
    pub source_id: String,
    pub cycle_period: u32,
    pub amplitude: f64,
    pub baseline: f64,
    pub growth_rate: f64,
    pub noise_level: f64,
    pub noise_seed: u64,
    /// Inclusive `[t_0, t_m]`.
    pub window: (i32, i32),
    pub demand_metric: Metric,
}

impl LifecycleScenario {
    pub fn new(cycle_period: u32, window: (i32, i32), noise_seed: u64) -> Self {
        Self {
            object_id: "synthetic".into(),
            source_id: "synthetic".into(),
            cycle_period,
            amplitude: 40.0,
            baseline: 100.0,
            growth_rate: 0.05,
            noise_level: 0.05,
            noise_seed,
            window,
            demand_metric: Metric::AccessFrequency,
        }
    }

    pub fn years(&self) -> std::ops::RangeInclusive<i32> {
        self.window.0..=self.window.1
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |m: String| Err(IngestError::InvalidScenario(m));
        if self.object_id.trim().is_empty() || self.source_id.trim().is_empty() {
            return bad("object_id and source_id must not be blank".into());
        }
        if self.cycle_period < 2 {
            return bad(format!("cycle_period {} must be >= 2", self.cycle_period));
        }
        let (t0, tm) = self.window;
        if tm <= t0 {
            return bad(format!("window {t0}:{tm} is empty"));
        }
        let years = i64::from(tm) - i64::from(t0) + 1;
        if years < 2 * i64::from(self.cycle_period) {
            return bad(format!("window of {years} years is shorter than two cycles of {}", self.cycle_period));
        }
        if !(self.baseline.is_finite() && self.baseline > 0.0) {
            return bad(format!("baseline {} must be positive", self.baseline));
        }
        if !(self.amplitude >= 0.0 && self.amplitude < self.baseline) {
            return bad(format!("amplitude {} must lie in [0, baseline)", self.amplitude));
        }
        if !(self.growth_rate.is_finite() && self.growth_rate >= 0.0) {
            return bad(format!("growth_rate {} must be non-negative", self.growth_rate));
        }
        if !(self.noise_level.is_finite() && self.noise_level >= 0.0) {
            return bad(format!("noise_level {} must be non-negative", self.noise_level));
        }
        if self.demand_metric == Metric::HitCount {
            return bad("demand_metric must differ from hit_count".into());
        }
        Ok(())
    }
}

/// `q01`, `q02`, ... zero-padded to the width of `n`.
pub fn query_ids_for(n: usize) -> Vec<String> {
    let width = n.to_string().len().max(2);
    (1..=n).map(|i| format!("q{i:0width$}")).collect()
}

pub fn generate_lifecycle(scenario: &LifecycleScenario, n_queries: usize) -> Result<Vec<MeasurementRecord>, IngestError> {
    generate_lifecycle_for(scenario, &query_ids_for(n_queries))
}

/// Same as [`generate_lifecycle`] with caller-supplied query ids, e.g. the
/// ids of a generated query set.
pub fn generate_lifecycle_for(
    scenario: &LifecycleScenario,
    query_ids: &[String],
) -> Result<Vec<MeasurementRecord>, IngestError> {
    scenario.validate()?;
    if query_ids.is_empty() {
        return Err(IngestError::InvalidScenario("at least one query is required".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.noise_seed);
    let jitter: Vec<f64> = query_ids.iter().map(|_| rng.random_range(0.6..1.4)).collect();

    let period = f64::from(scenario.cycle_period);
    let relative = scenario.amplitude / scenario.baseline;
    let hit_base = 10.0 * scenario.baseline;

    let mut out = Vec::with_capacity(query_ids.len() * scenario.years().count() * 2);
    for year in scenario.years() {
        let s = f64::from(year - scenario.window.0);
        let phase = (2.0 * std::f64::consts::PI * s / period).cos();
        for (qid, j) in query_ids.iter().zip(&jitter) {
            let e_dem: f64 = StandardNormal.sample(&mut rng);
            let e_hit: f64 = StandardNormal.sample(&mut rng);
            let dem_cycle = phase + scenario.noise_level * e_dem;
            let hit_cycle = phase + scenario.noise_level * e_hit;

            let demand = j * (scenario.baseline + scenario.amplitude * dem_cycle);
            let hits = j * hit_base * (1.0 + scenario.growth_rate * s) * (1.0 + relative * hit_cycle);

            let mut push = |metric, value: f64| {
                out.push(MeasurementRecord {
                    object_id: scenario.object_id.clone(),
                    source_id: scenario.source_id.clone(),
                    query_id: qid.clone(),
                    year,
                    metric,
                    value: value.max(0.0).round(),
                })
            };
            push(Metric::HitCount, hits);
            push(scenario.demand_metric, demand);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_csv, write_csv, MeasurementStore};

    /// Interior strict maxima of a sequence, plateau start counted once.
    fn maxima_oracle(v: &[f64]) -> Vec<usize> {
        let mut out = Vec::new();
        let mut i = 1;
        while i + 1 < v.len() {
            if v[i] > v[i - 1] {
                let mut j = i;
                while j + 1 < v.len() && v[j + 1] == v[i] {
                    j += 1;
                }
                if j + 1 < v.len() && v[j + 1] < v[i] {
                    out.push(i);
                }
                i = j + 1;
            } else {
                i += 1;
            }
        }
        out
    }

    fn yearly_mean(recs: &[MeasurementRecord], metric: Metric) -> Vec<f64> {
        let mut store = MeasurementStore::new();
        store.insert_all(recs.to_vec()).unwrap();
        let (o, s) = (&recs[0].object_id, &recs[0].source_id);
        store
            .query_series(o, s, metric, recs[0].year..=recs.last().unwrap().year)
            .unwrap()
            .into_iter()
            .map(|y| {
                let v = y.values.unwrap();
                v.iter().sum::<f64>() / v.len() as f64
            })
            .collect()
    }

    #[test]
    fn period_eight_maxima_spacing() {
        let sc = LifecycleScenario::new(8, (2000, 2023), 42);
        let recs = generate_lifecycle(&sc, 16).unwrap();
        let peaks = maxima_oracle(&yearly_mean(&recs, Metric::AccessFrequency));
        assert!(peaks.len() >= 2, "{peaks:?}");
        for w in peaks.windows(2) {
            assert!((7..=9).contains(&(w[1] - w[0])), "{peaks:?}");
        }
    }

    #[test]
    fn zero_amplitude_is_flat() {
        let mut sc = LifecycleScenario::new(8, (2000, 2023), 7);
        sc.amplitude = 0.0;
        let recs = generate_lifecycle(&sc, 5).unwrap();
        let dem = yearly_mean(&recs, Metric::AccessFrequency);
        assert!(dem.windows(2).all(|w| w[0] == w[1]));
        assert!(maxima_oracle(&dem).is_empty());
        let hits = yearly_mean(&recs, Metric::HitCount);
        assert!(hits.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn deterministic() {
        let sc = LifecycleScenario::new(6, (2000, 2023), 3);
        let a = write_csv(generate_lifecycle(&sc, 4).unwrap()).unwrap();
        let b = write_csv(generate_lifecycle(&sc, 4).unwrap()).unwrap();
        assert_eq!(a, b);
        let other = LifecycleScenario { noise_seed: 4, ..sc };
        assert_ne!(a, write_csv(generate_lifecycle(&other, 4).unwrap()).unwrap());
    }

    #[test]
    fn csv_round_trip_equals_store() {
        let sc = LifecycleScenario::new(4, (2000, 2023), 1);
        let recs = generate_lifecycle(&sc, 3).unwrap();
        let mut direct = MeasurementStore::new();
        direct.insert_all(recs.clone()).unwrap();
        let mut via_csv = MeasurementStore::new();
        via_csv.insert_all(parse_csv(&write_csv(recs).unwrap()).unwrap()).unwrap();
        assert_eq!(direct, via_csv);
    }

    #[test]
    fn invalid_scenarios() {
        let ok = LifecycleScenario::new(8, (2000, 2023), 1);
        let cases = [
            LifecycleScenario { cycle_period: 1, ..ok.clone() },
            LifecycleScenario { window: (2000, 2010), ..ok.clone() },
            LifecycleScenario { window: (2000, 2000), ..ok.clone() },
            LifecycleScenario { amplitude: 100.0, ..ok.clone() },
            LifecycleScenario { baseline: 0.0, ..ok.clone() },
            LifecycleScenario { growth_rate: -0.1, ..ok.clone() },
            LifecycleScenario { demand_metric: Metric::HitCount, ..ok.clone() },
        ];
        for sc in cases {
            assert!(matches!(generate_lifecycle(&sc, 2), Err(IngestError::InvalidScenario(_))), "{sc:?}");
        }
        assert!(generate_lifecycle(&ok, 0).is_err());
    }

    #[test]
    fn query_id_padding() {
        assert_eq!(query_ids_for(3), ["q01", "q02", "q03"]);
        assert_eq!(query_ids_for(100)[0], "q001");
    }
}
