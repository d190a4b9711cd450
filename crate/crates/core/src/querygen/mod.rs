//! Boolean query generation from a linguistic model.
//!
//! Each query is a conjunction of one marker and one archetype from each
//! class. Synonyms collapse into OR-groups, so the number of queries is
//! `|M|·|A_s|·|A_c|·|A_r|` regardless of how many synonyms a term has. When
//! that exceeds `max_queries`, the highest-scoring queries are kept (score is
//! the product of archetype weights), ties broken by canonical text.

mod dialect;
mod expr;
mod parser;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_model, ArchetypeClass, Constraints, LinguisticModel, Violation};

pub use dialect::{render_query, render_query_named, Dialect};
pub use expr::{query_id, QueryExpr, QueryNode, QueryRecord};
pub use parser::parse_query;

#[derive(Debug, Error)]
pub enum QueryError {
    #[error("invalid model: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidModel(Vec<Violation>),
    #[error("unknown dialect {0:?} (expected generic, web-plus or phrase-quoted)")]
    UnknownDialect(String),
    #[error("query syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("query set file: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    pub object_id: String,
    pub queries: Vec<QueryExpr>,
    pub generation_config: Constraints,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuerySetFile {
    object_id: String,
    generation_config: Constraints,
    queries: Vec<QueryRecord>,
}

impl QuerySet {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.queries.iter().map(|q| q.query_id.as_str()).collect()
    }

    pub fn to_json(&self) -> String {
        let file = QuerySetFile {
            object_id: self.object_id.clone(),
            generation_config: self.generation_config.clone(),
            queries: self.queries.iter().map(QueryRecord::from).collect(),
        };
        serde_json::to_string_pretty(&file).expect("query set serializes")
    }

    /// Reads an export back; texts are re-parsed and ids checked against them.
    pub fn from_json(text: &str) -> Result<Self, QueryError> {
        let file: QuerySetFile = serde_json::from_str(text).map_err(|e| QueryError::Io(e.to_string()))?;
        let mut queries = Vec::with_capacity(file.queries.len());
        for rec in file.queries {
            let q = QueryExpr::new(parse_query(&rec.text)?, rec.score);
            if q.query_id != rec.query_id {
                return Err(QueryError::Io(format!(
                    "query_id {} does not match text {:?} (expected {})",
                    rec.query_id, rec.text, q.query_id
                )));
            }
            queries.push(q);
        }
        Ok(Self { object_id: file.object_id, queries, generation_config: file.generation_config })
    }

    pub fn save(&self, path: &Path) -> Result<(), QueryError> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| QueryError::Io(e.to_string()))
    }
}

/// The classes taking part in a query and the extra archetypes added when
/// `terms_per_query` exceeds one marker plus one term per class.
fn query_shape(terms_per_query: usize) -> (usize, usize) {
    let archetype_terms = terms_per_query.saturating_sub(1).max(1);
    let classes = archetype_terms.min(ArchetypeClass::ALL.len());
    (classes, archetype_terms - classes)
}

pub fn generate_queries(model: &LinguisticModel) -> Result<QuerySet, QueryError> {
    let report = validate_model(model);
    if !report.is_valid() {
        return Err(QueryError::InvalidModel(report.violations));
    }
    Ok(generate_unchecked(model))
}

/// Generation without the validity gate, for models accepted with relaxed
/// validation options (e.g. unequal class sizes).
pub fn generate_unchecked(model: &LinguisticModel) -> QuerySet {
    let c = &model.constraints;
    let (n_classes, n_extra) = query_shape(c.terms_per_query);
    let classes = &ArchetypeClass::ALL[..n_classes];

    let group = |term: &str, synonyms: &[String]| {
        if c.use_synonyms {
            QueryNode::synonym_group(term, synonyms)
        } else {
            QueryNode::term(term)
        }
    };

    // Odometer over (marker, one index per used class).
    let mut radices = vec![model.markers.len()];
    radices.extend(classes.iter().map(|&cl| model.class(cl).len()));
    let total: usize = radices.iter().product();

    let mut seen = HashSet::new();
    let mut all: Vec<(QueryExpr, String)> = Vec::with_capacity(total);
    let mut digits = vec![0usize; radices.len()];
    for _ in 0..total {
        let marker = &model.markers[digits[0]];
        let mut nodes = vec![group(&marker.term, &marker.synonyms)];
        let mut score = 1.0;
        let mut used: Vec<(ArchetypeClass, usize)> = Vec::new();
        for (k, &cl) in classes.iter().enumerate() {
            let a = &model.class(cl)[digits[k + 1]];
            nodes.push(group(&a.term, &a.synonyms));
            score *= a.weight;
            used.push((cl, digits[k + 1]));
        }
        // Extra archetypes: round-robin over classes, walking forward from the
        // chosen archetype; skipped once a class has no unused member left.
        for e in 0..n_extra {
            let (cl, base) = used[e % used.len()];
            let members = model.class(cl);
            let idx = (base + 1 + e / used.len()) % members.len();
            if used.iter().any(|&(ucl, ui)| ucl == cl && ui == idx) {
                continue;
            }
            let a = &members[idx];
            nodes.push(group(&a.term, &a.synonyms));
            score *= a.weight;
            used.push((cl, idx));
        }
        let q = QueryExpr::new(QueryNode::And(nodes), score);
        if seen.insert(q.query_id.clone()) {
            let text = q.text();
            all.push((q, text));
        }

        for k in (0..digits.len()).rev() {
            digits[k] += 1;
            if digits[k] < radices[k] {
                break;
            }
            digits[k] = 0;
        }
    }

    all.sort_by(|(qa, ta), (qb, tb)| qb.score.total_cmp(&qa.score).then_with(|| ta.cmp(tb)));
    all.truncate(c.max_queries);

    QuerySet {
        object_id: model.object_id.clone(),
        queries: all.into_iter().map(|(q, _)| q).collect(),
        generation_config: c.clone(),
    }
}
