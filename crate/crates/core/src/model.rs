//! Linguistic model of an evaluated object.
//!
//! A model holds three archetype classes (structure, application conditions,
//! results), a set of marker terms that scope the search to a product family,
//! and the generation constraints used by [`crate::querygen`].
//!
//! Models are read from JSON. Optional fields may be omitted; omitted values
//! are taken from `constraints.defaults` when a matching key exists there and
//! from the built-in defaults otherwise.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_WEIGHT: f64 = 1.0;
pub const DEFAULT_MAX_QUERIES: usize = 64;
pub const DEFAULT_TERMS_PER_QUERY: usize = 4;

/// Keys understood in `constraints.defaults`.
pub const DEFAULT_KEYS: [&str; 4] = ["weight", "max_queries", "terms_per_query", "use_synonyms"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archetype {
    pub term: String,
    #[serde(default)]
    pub synonyms: Vec<String>,
    pub weight: f64,
}

impl Archetype {
    pub fn new(term: impl Into<String>) -> Self {
        Self { term: term.into(), synonyms: Vec::new(), weight: DEFAULT_WEIGHT }
    }

    pub fn with_synonyms<I, S>(mut self, synonyms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.synonyms = synonyms.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Marker {
    pub term: String,
    #[serde(default)]
    pub synonyms: Vec<String>,
}

impl Marker {
    pub fn new(term: impl Into<String>) -> Self {
        Self { term: term.into(), synonyms: Vec::new() }
    }

    pub fn with_synonyms<I, S>(mut self, synonyms: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.synonyms = synonyms.into_iter().map(Into::into).collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    pub max_queries: usize,
    pub terms_per_query: usize,
    pub use_synonyms: bool,
    #[serde(default)]
    pub defaults: BTreeMap<String, String>,
}

impl Default for Constraints {
    fn default() -> Self {
        Self {
            max_queries: DEFAULT_MAX_QUERIES,
            terms_per_query: DEFAULT_TERMS_PER_QUERY,
            use_synonyms: true,
            defaults: BTreeMap::new(),
        }
    }
}

/// The archetype classes, in the order they are combined into queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchetypeClass {
    Structure,
    Condition,
    Result,
}

impl ArchetypeClass {
    pub const ALL: [ArchetypeClass; 3] =
        [ArchetypeClass::Structure, ArchetypeClass::Condition, ArchetypeClass::Result];
}

impl fmt::Display for ArchetypeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ArchetypeClass::Structure => "structure_archetypes",
            ArchetypeClass::Condition => "condition_archetypes",
            ArchetypeClass::Result => "result_archetypes",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinguisticModel {
    pub object_id: String,
    pub structure_archetypes: Vec<Archetype>,
    pub condition_archetypes: Vec<Archetype>,
    pub result_archetypes: Vec<Archetype>,
    pub markers: Vec<Marker>,
    pub constraints: Constraints,
}

impl LinguisticModel {
    pub fn class(&self, class: ArchetypeClass) -> &[Archetype] {
        match class {
            ArchetypeClass::Structure => &self.structure_archetypes,
            ArchetypeClass::Condition => &self.condition_archetypes,
            ArchetypeClass::Result => &self.result_archetypes,
        }
    }

    /// The smartphone model used throughout the documentation and tests.
    pub fn smartphone_example() -> Self {
        Self {
            object_id: "smartphone".into(),
            structure_archetypes: vec![Archetype::new("камера"), Archetype::new("экран")],
            condition_archetypes: vec![Archetype::new("NFC"), Archetype::new("4G")],
            result_archetypes: vec![
                Archetype::new("производительность"),
                Archetype::new("аккумулятор"),
            ],
            markers: vec![Marker::new("смартфон"), Marker::new("Galaxy S")],
            constraints: Constraints::default(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| ModelError::Io(e.to_string()))
    }
}

/// Machine-readable violation codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    CardinalityMismatch,
    EmptyClass,
    EmptyMarkers,
    BlankObjectId,
    BlankTerm,
    DuplicateTerm,
    SynonymEqualsTerm,
    WeightOutOfRange,
    InvalidConstraint,
    InvalidDefault,
}

impl ViolationCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationCode::CardinalityMismatch => "CARDINALITY_MISMATCH",
            ViolationCode::EmptyClass => "EMPTY_CLASS",
            ViolationCode::EmptyMarkers => "EMPTY_MARKERS",
            ViolationCode::BlankObjectId => "BLANK_OBJECT_ID",
            ViolationCode::BlankTerm => "BLANK_TERM",
            ViolationCode::DuplicateTerm => "DUPLICATE_TERM",
            ViolationCode::SynonymEqualsTerm => "SYNONYM_EQUALS_TERM",
            ViolationCode::WeightOutOfRange => "WEIGHT_OUT_OF_RANGE",
            ViolationCode::InvalidConstraint => "INVALID_CONSTRAINT",
            ViolationCode::InvalidDefault => "INVALID_DEFAULT",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    /// Dotted path of the offending field, e.g. `condition_archetypes[1].weight`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Violations downgraded by [`ValidationOptions`]; they do not make the model invalid.
    pub warnings: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: ViolationCode, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { code, path: path.into(), message: message.into() });
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidationOptions {
    /// Report unequal class sizes as a warning instead of a violation.
    pub cardinality_as_warning: bool,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("failed to parse model: {0}")]
    Parse(String),
    #[error("model is invalid: {}", format_violations(.0))]
    Validation(Vec<Violation>),
    #[error("i/o error: {0}")]
    Io(String),
}

fn format_violations(violations: &[Violation]) -> String {
    violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Case-folded, whitespace-normalized form used for every term comparison.
pub fn fold_term(term: &str) -> String {
    term.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

pub fn validate_model(model: &LinguisticModel) -> ValidationReport {
    validate_model_with(model, ValidationOptions::default())
}

pub fn validate_model_with(model: &LinguisticModel, options: ValidationOptions) -> ValidationReport {
    let mut report = ValidationReport::default();

    if model.object_id.trim().is_empty() {
        report.push(ViolationCode::BlankObjectId, "object_id", "object_id must not be blank");
    }

    for class in ArchetypeClass::ALL {
        let archetypes = model.class(class);
        if archetypes.is_empty() {
            report.push(ViolationCode::EmptyClass, class.to_string(), "archetype class is empty");
        }
        let mut seen = HashSet::new();
        for (i, a) in archetypes.iter().enumerate() {
            let path = format!("{class}[{i}]");
            check_term(&mut report, &path, &a.term, &a.synonyms, &mut seen);
            if !(a.weight > 0.0 && a.weight <= 1.0) {
                report.push(
                    ViolationCode::WeightOutOfRange,
                    format!("{path}.weight"),
                    format!("weight {} is outside (0, 1]", a.weight),
                );
            }
        }
    }

    let sizes = ArchetypeClass::ALL.map(|c| model.class(c).len());
    if sizes[0] != sizes[1] || sizes[1] != sizes[2] {
        let v = Violation {
            code: ViolationCode::CardinalityMismatch,
            path: "archetypes".into(),
            message: format!(
                "class sizes differ: structure={}, condition={}, result={}",
                sizes[0], sizes[1], sizes[2]
            ),
        };
        if options.cardinality_as_warning {
            report.warnings.push(v);
        } else {
            report.violations.push(v);
        }
    }

    if model.markers.is_empty() {
        report.push(ViolationCode::EmptyMarkers, "markers", "at least one marker is required");
    }
    let mut seen = HashSet::new();
    for (i, m) in model.markers.iter().enumerate() {
        check_term(&mut report, &format!("markers[{i}]"), &m.term, &m.synonyms, &mut seen);
    }

    let c = &model.constraints;
    if c.max_queries < 1 {
        report.push(ViolationCode::InvalidConstraint, "constraints.max_queries", "must be >= 1");
    }
    if c.terms_per_query < 2 {
        report.push(ViolationCode::InvalidConstraint, "constraints.terms_per_query", "must be >= 2");
    }
    for key in c.defaults.keys() {
        if !DEFAULT_KEYS.contains(&key.as_str()) {
            report.push(
                ViolationCode::InvalidDefault,
                format!("constraints.defaults.{key}"),
                format!("unknown default key (expected one of {})", DEFAULT_KEYS.join(", ")),
            );
        }
    }

    report
}

fn check_term(
    report: &mut ValidationReport,
    path: &str,
    term: &str,
    synonyms: &[String],
    seen: &mut HashSet<String>,
) {
    let folded = fold_term(term);
    if folded.is_empty() {
        report.push(ViolationCode::BlankTerm, format!("{path}.term"), "term must not be blank");
        return;
    }
    if !seen.insert(folded.clone()) {
        report.push(
            ViolationCode::DuplicateTerm,
            format!("{path}.term"),
            format!("term {term:?} duplicates an earlier term in the same class"),
        );
    }
    for (j, s) in synonyms.iter().enumerate() {
        let fs = fold_term(s);
        if fs.is_empty() {
            report.push(ViolationCode::BlankTerm, format!("{path}.synonyms[{j}]"), "synonym must not be blank");
        } else if fs == folded {
            report.push(
                ViolationCode::SynonymEqualsTerm,
                format!("{path}.synonyms[{j}]"),
                format!("synonym {s:?} equals its term"),
            );
        }
    }
}

// On-disk shapes. Everything optional is an Option so that `constraints.defaults`
// can fill it in.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArchetype {
    term: String,
    #[serde(default)]
    synonyms: Vec<String>,
    weight: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawConstraints {
    max_queries: Option<usize>,
    terms_per_query: Option<usize>,
    use_synonyms: Option<bool>,
    #[serde(default)]
    defaults: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    object_id: String,
    structure_archetypes: Vec<RawArchetype>,
    condition_archetypes: Vec<RawArchetype>,
    result_archetypes: Vec<RawArchetype>,
    markers: Vec<Marker>,
    #[serde(default)]
    constraints: RawConstraints,
}

fn default_from<T: std::str::FromStr>(
    defaults: &BTreeMap<String, String>,
    key: &str,
    builtin: T,
    bad: &mut Vec<Violation>,
) -> T {
    match defaults.get(key) {
        None => builtin,
        Some(raw) => raw.trim().parse().unwrap_or_else(|_| {
            bad.push(Violation {
                code: ViolationCode::InvalidDefault,
                path: format!("constraints.defaults.{key}"),
                message: format!("cannot parse {raw:?}"),
            });
            builtin
        }),
    }
}

/// Parses a model from JSON text, substitutes defaults and validates it.
pub fn parse_model(text: &str) -> Result<LinguisticModel, ModelError> {
    parse_model_with(text, ValidationOptions::default())
}

pub fn parse_model_with(text: &str, options: ValidationOptions) -> Result<LinguisticModel, ModelError> {
    if text.trim().is_empty() {
        return Err(ModelError::Parse("empty model file".into()));
    }
    let raw: RawModel = serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;

    let defaults = raw.constraints.defaults;
    let mut bad = Vec::new();
    let weight = default_from(&defaults, "weight", DEFAULT_WEIGHT, &mut bad);
    let max_queries = raw
        .constraints
        .max_queries
        .unwrap_or_else(|| default_from(&defaults, "max_queries", DEFAULT_MAX_QUERIES, &mut bad));
    let terms_per_query = raw
        .constraints
        .terms_per_query
        .unwrap_or_else(|| default_from(&defaults, "terms_per_query", DEFAULT_TERMS_PER_QUERY, &mut bad));
    let use_synonyms = raw
        .constraints
        .use_synonyms
        .unwrap_or_else(|| default_from(&defaults, "use_synonyms", true, &mut bad));

    let resolve = |items: Vec<RawArchetype>| -> Vec<Archetype> {
        items
            .into_iter()
            .map(|a| Archetype { term: a.term, synonyms: a.synonyms, weight: a.weight.unwrap_or(weight) })
            .collect()
    };

    let model = LinguisticModel {
        object_id: raw.object_id,
        structure_archetypes: resolve(raw.structure_archetypes),
        condition_archetypes: resolve(raw.condition_archetypes),
        result_archetypes: resolve(raw.result_archetypes),
        markers: raw.markers,
        constraints: Constraints { max_queries, terms_per_query, use_synonyms, defaults },
    };

    let mut report = validate_model_with(&model, options);
    report.violations.extend(bad);
    if report.is_valid() {
        Ok(model)
    } else {
        Err(ModelError::Validation(report.violations))
    }
}

pub fn load_model(path: &Path) -> Result<LinguisticModel, ModelError> {
    load_model_with(path, ValidationOptions::default())
}

pub fn load_model_with(path: &Path, options: ValidationOptions) -> Result<LinguisticModel, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
    parse_model_with(&text, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE1: &str = r#"{
        "object_id": "smartphone",
        "structure_archetypes": [{"term": "камера"}, {"term": "экран"}],
        "condition_archetypes": [{"term": "NFC"}, {"term": "4G"}],
        "result_archetypes": [{"term": "производительность"}, {"term": "аккумулятор"}],
        "markers": [{"term": "смартфон"}, {"term": "Galaxy S"}]
    }"#;

    #[test]
    fn table1_model_is_valid() {
        let report = validate_model(&LinguisticModel::smartphone_example());
        assert!(report.is_valid(), "{report:?}");
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn table1_file_loads_with_defaults() {
        let m = parse_model(TABLE1).unwrap();
        assert_eq!(m.structure_archetypes.len(), 2);
        assert_eq!(m.condition_archetypes.len(), 2);
        assert_eq!(m.result_archetypes.len(), 2);
        assert_eq!(m.markers.len(), 2);
        assert_eq!(m.constraints, Constraints::default());
        assert!(m.structure_archetypes.iter().all(|a| a.weight == 1.0));
        assert_eq!(m, LinguisticModel::smartphone_example());
    }

    #[test]
    fn cardinality_mismatch() {
        let mut m = LinguisticModel::smartphone_example();
        m.condition_archetypes.pop();
        let report = validate_model(&m);
        assert!(report.has(ViolationCode::CardinalityMismatch));

        let relaxed = validate_model_with(&m, ValidationOptions { cardinality_as_warning: true });
        assert!(relaxed.is_valid());
        assert_eq!(relaxed.warnings[0].code, ViolationCode::CardinalityMismatch);
    }

    #[test]
    fn empty_markers() {
        let mut m = LinguisticModel::smartphone_example();
        m.markers.clear();
        assert!(validate_model(&m).has(ViolationCode::EmptyMarkers));
    }

    #[test]
    fn case_folded_duplicates_reported() {
        let mut m = LinguisticModel::smartphone_example();
        m.structure_archetypes[1] = Archetype::new("  КАМЕРА ");
        m.condition_archetypes[1] = Archetype::new("nfc");
        let report = validate_model(&m);
        let dups: Vec<_> =
            report.violations.iter().filter(|v| v.code == ViolationCode::DuplicateTerm).collect();
        assert_eq!(dups.len(), 2);
    }

    #[test]
    fn synonym_equal_to_term() {
        let mut m = LinguisticModel::smartphone_example();
        m.markers[0] = Marker::new("смартфон").with_synonyms(["Смартфон"]);
        assert!(validate_model(&m).has(ViolationCode::SynonymEqualsTerm));
    }

    #[test]
    fn empty_file_is_parse_error() {
        assert!(matches!(parse_model(""), Err(ModelError::Parse(_))));
        assert!(matches!(parse_model("  \n"), Err(ModelError::Parse(_))));
    }

    #[test]
    fn weight_out_of_range_is_validation_error() {
        let text = TABLE1.replace(r#"{"term": "экран"}"#, r#"{"term": "экран", "weight": 1.5}"#);
        match parse_model(&text) {
            Err(ModelError::Validation(v)) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].code, ViolationCode::WeightOutOfRange);
                assert_eq!(v[0].path, "structure_archetypes[1].weight");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = TABLE1.replacen("\"object_id\"", "\"colour\": 1, \"object_id\"", 1);
        assert!(matches!(parse_model(&text), Err(ModelError::Parse(_))));
    }

    #[test]
    fn defaults_map_fills_omitted_fields() {
        let text = TABLE1.replace(
            "\"markers\"",
            r#""constraints": {"defaults": {"weight": "0.5", "max_queries": "8"}}, "markers""#,
        );
        let m = parse_model(&text).unwrap();
        assert_eq!(m.constraints.max_queries, 8);
        assert!(m.result_archetypes.iter().all(|a| a.weight == 0.5));
    }

    #[test]
    fn bad_default_values_reported() {
        let text = TABLE1.replace(
            "\"markers\"",
            r#""constraints": {"defaults": {"weight": "heavy", "colour": "red"}}, "markers""#,
        );
        match parse_model(&text) {
            Err(ModelError::Validation(v)) => {
                assert_eq!(v.iter().filter(|v| v.code == ViolationCode::InvalidDefault).count(), 2);
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let mut m = LinguisticModel::smartphone_example();
        m.structure_archetypes[0] = Archetype::new("камера").with_synonyms(["camera"]).with_weight(0.7);
        m.save(&path).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
    }
}
