use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dialect::render_generic;

/// Boolean query tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum QueryNode {
    And(Vec<QueryNode>),
    Or(Vec<QueryNode>),
    Term(String),
}

impl QueryNode {
    pub fn term(t: impl Into<String>) -> Self {
        QueryNode::Term(t.into())
    }

    pub fn and<I: IntoIterator<Item = QueryNode>>(children: I) -> Self {
        QueryNode::And(children.into_iter().collect())
    }

    pub fn or<I: IntoIterator<Item = QueryNode>>(children: I) -> Self {
        QueryNode::Or(children.into_iter().collect())
    }

    /// A term with its synonyms as an OR-group, or the bare term when there are none.
    pub fn synonym_group(term: &str, synonyms: &[String]) -> Self {
        if synonyms.is_empty() {
            QueryNode::term(term)
        } else {
            QueryNode::Or(
                std::iter::once(term).chain(synonyms.iter().map(String::as_str)).map(QueryNode::term).collect(),
            )
        }
    }

    /// Order-independent normal form: nested same-kind groups are flattened,
    /// duplicate children removed, children sorted by their rendered text and
    /// single-child groups collapsed.
    pub fn canonical(&self) -> QueryNode {
        match self {
            QueryNode::Term(t) => QueryNode::Term(t.split_whitespace().collect::<Vec<_>>().join(" ")),
            QueryNode::And(children) => canonical_group(children, true),
            QueryNode::Or(children) => canonical_group(children, false),
        }
    }

    pub fn is_canonical(&self) -> bool {
        *self == self.canonical()
    }

    /// All terms in depth-first order.
    pub fn terms(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_terms(&mut out);
        out
    }

    fn collect_terms<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            QueryNode::Term(t) => out.push(t),
            QueryNode::And(c) | QueryNode::Or(c) => c.iter().for_each(|n| n.collect_terms(out)),
        }
    }

    pub fn children(&self) -> &[QueryNode] {
        match self {
            QueryNode::Term(_) => &[],
            QueryNode::And(c) | QueryNode::Or(c) => c,
        }
    }
}

fn canonical_group(children: &[QueryNode], is_and: bool) -> QueryNode {
    let mut flat: Vec<QueryNode> = Vec::with_capacity(children.len());
    for child in children {
        match (child.canonical(), is_and) {
            (QueryNode::And(inner), true) | (QueryNode::Or(inner), false) => flat.extend(inner),
            (other, _) => flat.push(other),
        }
    }
    let mut keyed: Vec<(String, QueryNode)> = flat.into_iter().map(|n| (render_generic(&n), n)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.dedup_by(|a, b| a.0 == b.0);
    let mut nodes: Vec<QueryNode> = keyed.into_iter().map(|(_, n)| n).collect();
    if nodes.len() == 1 {
        return nodes.pop().unwrap();
    }
    if is_and {
        QueryNode::And(nodes)
    } else {
        QueryNode::Or(nodes)
    }
}

impl fmt::Display for QueryNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_generic(self))
    }
}

/// Stable 64-bit identifier of a query: the first 16 hex digits of the
/// SHA-256 of its canonical generic rendering.
pub fn query_id(node: &QueryNode) -> String {
    let text = render_generic(&node.canonical());
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// A generated query together with its identifier and weight score.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryExpr {
    pub root: QueryNode,
    pub query_id: String,
    pub score: f64,
}

impl QueryExpr {
    pub fn new(root: QueryNode, score: f64) -> Self {
        let root = root.canonical();
        let query_id = query_id(&root);
        Self { root, query_id, score }
    }

    /// Canonical text in the generic dialect.
    pub fn text(&self) -> String {
        render_generic(&self.root)
    }
}

/// Serialized form of a query in a query-set export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRecord {
    pub query_id: String,
    pub text: String,
    pub score: f64,
}

impl From<&QueryExpr> for QueryRecord {
    fn from(q: &QueryExpr) -> Self {
        Self { query_id: q.query_id.clone(), text: q.text(), score: q.score }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_is_order_independent() {
        let a = QueryNode::and([QueryNode::term("b"), QueryNode::or([QueryNode::term("d"), QueryNode::term("c")])]);
        let b = QueryNode::and([QueryNode::or([QueryNode::term("c"), QueryNode::term("d")]), QueryNode::term("b")]);
        assert_eq!(a.canonical(), b.canonical());
        assert_eq!(query_id(&a), query_id(&b));
        assert_eq!(query_id(&a).len(), 16);
    }

    #[test]
    fn canonical_flattens_and_collapses() {
        let n = QueryNode::and([
            QueryNode::term("a"),
            QueryNode::and([QueryNode::term("b"), QueryNode::term("a")]),
            QueryNode::or([QueryNode::term("x")]),
        ]);
        assert_eq!(
            n.canonical(),
            QueryNode::and([QueryNode::term("a"), QueryNode::term("b"), QueryNode::term("x")])
        );
        assert!(n.canonical().is_canonical());
    }

    #[test]
    fn different_queries_get_different_ids() {
        let a = QueryNode::and([QueryNode::term("a"), QueryNode::term("b")]);
        let b = QueryNode::or([QueryNode::term("a"), QueryNode::term("b")]);
        assert_ne!(query_id(&a), query_id(&b));
    }
}
