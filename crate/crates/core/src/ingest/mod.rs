//! Measurement records and their store.
//!
//! A record is one observed value for an (object, source, query, year,
//! metric) key. The store keeps records in sorted key order so iteration,
//! export and every derived computation are deterministic.

mod adapter;
mod csv_io;
mod synth;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adapter::{collect_records, ReplayAdapter, SourceAdapter, SyntheticAdapter};
pub use csv_io::{ingest_csv, parse_csv, write_csv, CSV_HEADER};
pub use synth::{generate_lifecycle, generate_lifecycle_for, query_ids_for, LifecycleScenario};

pub const STORE_FILE: &str = "records.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    HitCount,
    AccessFrequency,
    CitationCount,
    SalesCount,
}

impl Metric {
    pub const ALL: [Metric; 4] =
        [Metric::HitCount, Metric::AccessFrequency, Metric::CitationCount, Metric::SalesCount];

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::HitCount => "hit_count",
            Metric::AccessFrequency => "access_frequency",
            Metric::CitationCount => "citation_count",
            Metric::SalesCount => "sales_count",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub object_id: String,
    pub source_id: String,
    pub query_id: String,
    pub year: i32,
    pub metric: Metric,
    pub value: f64,
}

/// Store key. Field order gives the index order: everything for one
/// (object, source, metric) is contiguous and sorted by year.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RecordKey {
    pub object_id: String,
    pub source_id: String,
    pub metric: Metric,
    pub year: i32,
    pub query_id: String,
}

impl fmt::Display for RecordKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {}, {})",
            self.object_id, self.source_id, self.query_id, self.year, self.metric
        )
    }
}

impl MeasurementRecord {
    pub fn key(&self) -> RecordKey {
        RecordKey {
            object_id: self.object_id.clone(),
            source_id: self.source_id.clone(),
            metric: self.metric,
            year: self.year,
            query_id: self.query_id.clone(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum IngestError {
    #[error("CSV format error on line {line}: {message}")]
    CsvFormat { line: u64, message: String },
    #[error("duplicate record key {0}")]
    DuplicateKey(String),
    #[error("value out of range on line {line}: {message}")]
    ValueRange { line: u64, message: String },
    #[error("no data for object {object_id:?}, source {source_id:?}, metric {metric}")]
    NoData { object_id: String, source_id: String, metric: Metric },
    #[error("invalid lifecycle scenario: {0}")]
    InvalidScenario(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// One year of a per-query series. `values` is `None` for a year with no
/// records at all; gaps are never filled with zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct YearSlice {
    pub year: i32,
    pub query_ids: Vec<String>,
    pub values: Option<Vec<f64>>,
}

impl YearSlice {
    pub fn is_gap(&self) -> bool {
        self.values.is_none()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeasurementStore {
    records: BTreeMap<RecordKey, f64>,
    window: Option<(i32, i32)>,
}

impl MeasurementStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// A store that rejects records outside `[first, last]`.
    pub fn with_window(first: i32, last: i32) -> Self {
        Self { records: BTreeMap::new(), window: Some((first, last)) }
    }

    pub fn window(&self) -> Option<(i32, i32)> {
        self.window
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, key: &RecordKey) -> Option<f64> {
        self.records.get(key).copied()
    }

    fn check(&self, rec: &MeasurementRecord) -> Result<(), IngestError> {
        if !(rec.value.is_finite() && rec.value >= 0.0) {
            return Err(IngestError::ValueRange { line: 0, message: format!("value {} is negative or not finite", rec.value) });
        }
        if let Some((lo, hi)) = self.window {
            if rec.year < lo || rec.year > hi {
                return Err(IngestError::ValueRange {
                    line: 0,
                    message: format!("year {} outside observation window {lo}..={hi}", rec.year),
                });
            }
        }
        if self.records.contains_key(&rec.key()) {
            return Err(IngestError::DuplicateKey(rec.key().to_string()));
        }
        Ok(())
    }

    pub fn insert(&mut self, rec: MeasurementRecord) -> Result<(), IngestError> {
        self.check(&rec)?;
        self.records.insert(rec.key(), rec.value);
        Ok(())
    }

    /// Inserts every record or none of them.
    pub fn insert_all(&mut self, recs: Vec<MeasurementRecord>) -> Result<usize, IngestError> {
        let mut staged = BTreeMap::new();
        for rec in &recs {
            self.check(rec)?;
            if staged.insert(rec.key(), rec.value).is_some() {
                return Err(IngestError::DuplicateKey(rec.key().to_string()));
            }
        }
        let n = staged.len();
        self.records.append(&mut staged);
        Ok(n)
    }

    pub fn iter(&self) -> impl Iterator<Item = MeasurementRecord> + '_ {
        self.records.iter().map(|(k, &value)| MeasurementRecord {
            object_id: k.object_id.clone(),
            source_id: k.source_id.clone(),
            query_id: k.query_id.clone(),
            year: k.year,
            metric: k.metric,
            value,
        })
    }

    pub fn records(&self) -> Vec<MeasurementRecord> {
        self.iter().collect()
    }

    fn prefix_range(
        &self,
        object_id: &str,
        source_id: &str,
        metric: Metric,
    ) -> impl Iterator<Item = (&RecordKey, &f64)> {
        let lo = RecordKey {
            object_id: object_id.to_string(),
            source_id: source_id.to_string(),
            metric,
            year: i32::MIN,
            query_id: String::new(),
        };
        let (o, s) = (object_id.to_string(), source_id.to_string());
        self.records
            .range(lo..)
            .take_while(move |(k, _)| k.object_id == o && k.source_id == s && k.metric == metric)
    }

    pub fn object_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.records.keys().map(|k| k.object_id.clone()).collect();
        ids.dedup();
        ids
    }

    pub fn source_ids(&self, object_id: &str) -> Vec<String> {
        let mut ids: Vec<String> = self
            .records
            .keys()
            .filter(|k| k.object_id == object_id)
            .map(|k| k.source_id.clone())
            .collect();
        ids.dedup();
        ids
    }

    /// Distinct query ids stored for an (object, source, metric).
    pub fn query_ids(&self, object_id: &str, source_id: &str, metric: Metric) -> Vec<String> {
        let mut ids: Vec<String> =
            self.prefix_range(object_id, source_id, metric).map(|(k, _)| k.query_id.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Per-year vectors of per-query values, ordered by query id.
    pub fn query_series(
        &self,
        object_id: &str,
        source_id: &str,
        metric: Metric,
        years: RangeInclusive<i32>,
    ) -> Result<Vec<YearSlice>, IngestError> {
        let no_data = || IngestError::NoData {
            object_id: object_id.to_string(),
            source_id: source_id.to_string(),
            metric,
        };
        let mut by_year: BTreeMap<i32, (Vec<String>, Vec<f64>)> = BTreeMap::new();
        let mut any = false;
        for (k, &v) in self.prefix_range(object_id, source_id, metric) {
            any = true;
            if years.contains(&k.year) {
                let e = by_year.entry(k.year).or_default();
                e.0.push(k.query_id.clone());
                e.1.push(v);
            }
        }
        if !any || by_year.is_empty() {
            return Err(no_data());
        }
        Ok(years
            .map(|year| match by_year.remove(&year) {
                Some((query_ids, values)) => YearSlice { year, query_ids, values: Some(values) },
                None => YearSlice { year, query_ids: Vec::new(), values: None },
            })
            .collect())
    }

    pub fn store_file(dir: &Path) -> PathBuf {
        dir.join(STORE_FILE)
    }

    /// Loads a store directory; a missing directory or file yields an empty store.
    pub fn open(dir: &Path) -> Result<Self, IngestError> {
        let file = Self::store_file(dir);
        let mut store = Self::new();
        if file.exists() {
            let text = std::fs::read_to_string(&file).map_err(|e| IngestError::Io(format!("{}: {e}", file.display())))?;
            store.insert_all(parse_csv(&text)?)?;
        }
        Ok(store)
    }

    pub fn save(&self, dir: &Path) -> Result<(), IngestError> {
        std::fs::create_dir_all(dir).map_err(|e| IngestError::Io(e.to_string()))?;
        let file = Self::store_file(dir);
        let text = write_csv(self.iter())?;
        std::fs::write(&file, text).map_err(|e| IngestError::Io(format!("{}: {e}", file.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn rec(source: &str, query: &str, year: i32, value: f64) -> MeasurementRecord {
        MeasurementRecord {
            object_id: "obj".into(),
            source_id: source.into(),
            query_id: query.into(),
            year,
            metric: Metric::HitCount,
            value,
        }
    }

    #[test]
    fn query_series_returns_per_query_vector() {
        let mut store = MeasurementStore::new();
        store
            .insert_all(vec![rec("s", "q2", 2005, 4.0), rec("s", "q1", 2005, 2.0), rec("s", "q3", 2005, 8.0)])
            .unwrap();
        let series = store.query_series("obj", "s", Metric::HitCount, 2005..=2005).unwrap();
        assert_eq!(series.len(), 1);
        assert_eq!(series[0].values.as_deref(), Some(&[2.0, 4.0, 8.0][..]));
        assert_eq!(series[0].query_ids, ["q1", "q2", "q3"]);
    }

    #[test]
    fn gaps_are_marked_not_zeroed() {
        let mut store = MeasurementStore::new();
        store.insert_all(vec![rec("s", "q1", 2004, 1.0), rec("s", "q1", 2006, 3.0)]).unwrap();
        let series = store.query_series("obj", "s", Metric::HitCount, 2004..=2006).unwrap();
        assert!(!series[0].is_gap());
        assert!(series[1].is_gap());
        assert_eq!(series[1].values, None);
        assert!(!series[2].is_gap());
    }

    #[test]
    fn unknown_source_is_no_data() {
        let mut store = MeasurementStore::new();
        store.insert(rec("s", "q1", 2004, 1.0)).unwrap();
        assert!(matches!(
            store.query_series("obj", "other", Metric::HitCount, 2000..=2010),
            Err(IngestError::NoData { .. })
        ));
        assert!(matches!(
            store.query_series("obj", "s", Metric::AccessFrequency, 2000..=2010),
            Err(IngestError::NoData { .. })
        ));
        assert!(matches!(
            store.query_series("obj", "s", Metric::HitCount, 2010..=2012),
            Err(IngestError::NoData { .. })
        ));
    }

    #[test]
    fn duplicate_and_range_checks() {
        let mut store = MeasurementStore::with_window(2000, 2010);
        store.insert(rec("s", "q1", 2004, 1.0)).unwrap();
        assert!(matches!(store.insert(rec("s", "q1", 2004, 2.0)), Err(IngestError::DuplicateKey(_))));
        assert!(matches!(store.insert(rec("s", "q1", 2011, 2.0)), Err(IngestError::ValueRange { .. })));
        assert!(matches!(store.insert(rec("s", "q2", 2004, -1.0)), Err(IngestError::ValueRange { .. })));
        assert!(matches!(store.insert(rec("s", "q2", 2004, f64::NAN)), Err(IngestError::ValueRange { .. })));
    }

    #[test]
    fn insert_all_is_atomic() {
        let mut store = MeasurementStore::new();
        store.insert(rec("s", "q1", 2004, 1.0)).unwrap();
        let before = store.clone();
        let err = store.insert_all(vec![rec("s", "q9", 2004, 1.0), rec("s", "q1", 2004, 5.0)]);
        assert!(err.is_err());
        assert_eq!(store, before);
        let err = store.insert_all(vec![rec("s", "q8", 2004, 1.0), rec("s", "q8", 2004, 1.0)]);
        assert!(matches!(err, Err(IngestError::DuplicateKey(_))));
        assert_eq!(store, before);
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let recs = vec![rec("b", "q1", 2004, 1.0), rec("a", "q2", 2001, 2.0), rec("a", "q1", 2003, 3.0)];
        let mut x = MeasurementStore::new();
        x.insert_all(recs.clone()).unwrap();
        let mut y = MeasurementStore::new();
        for r in recs.into_iter().rev() {
            y.insert(r).unwrap();
        }
        assert_eq!(x, y);
        assert_eq!(x.records(), y.records());
        assert_eq!(x.source_ids("obj"), ["a", "b"]);
    }

    #[test]
    fn save_and_open() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = MeasurementStore::new();
        store.insert_all(vec![rec("s", "q1", 2004, 1.5), rec("s", "q2", 2004, 0.1)]).unwrap();
        store.save(dir.path()).unwrap();
        assert_eq!(MeasurementStore::open(dir.path()).unwrap(), store);
        assert!(MeasurementStore::open(&dir.path().join("missing")).unwrap().is_empty());
    }
}
