//! Query-string dialects.
//!
//! * `generic`: infix `AND`/`OR`; AND operands are parenthesized, OR-groups
//!   carry their own parentheses: `(смартфон) AND (камера OR camera)`.
//!   This is the only dialect [`super::parse_query`] reads back.
//! * `web-plus`: required-term prefix syntax: `+смартфон +(камера OR camera)`.
//! * `phrase-quoted`: every term double-quoted, infix operators.
//!
//! Terms that contain whitespace, parentheses, quotes, backslashes, a leading
//! `+`, or that spell an operator keyword are quoted in `generic` and
//! `web-plus`, with `"` and `\` backslash-escaped.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::expr::QueryNode;
use super::QueryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dialect {
    Generic,
    WebPlus,
    PhraseQuoted,
}

impl Dialect {
    pub const ALL: [Dialect; 3] = [Dialect::Generic, Dialect::WebPlus, Dialect::PhraseQuoted];

    pub fn name(&self) -> &'static str {
        match self {
            Dialect::Generic => "generic",
            Dialect::WebPlus => "web-plus",
            Dialect::PhraseQuoted => "phrase-quoted",
        }
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dialect {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Dialect::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| QueryError::UnknownDialect(s.to_string()))
    }
}

pub fn render_query(node: &QueryNode, dialect: Dialect) -> String {
    match dialect {
        Dialect::Generic => render_generic(node),
        Dialect::WebPlus => render_web_plus(node),
        Dialect::PhraseQuoted => render_phrase(node),
    }
}

/// Looks a dialect up by name and renders.
pub fn render_query_named(node: &QueryNode, dialect: &str) -> Result<String, QueryError> {
    Ok(render_query(node, dialect.parse()?))
}

pub(crate) fn needs_quotes(term: &str) -> bool {
    term.is_empty()
        || term == "AND"
        || term == "OR"
        || term.starts_with('+')
        || term.chars().any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '"' | '\\'))
}

fn quote(term: &str) -> String {
    let mut out = String::with_capacity(term.len() + 2);
    out.push('"');
    for c in term.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn bare_or_quoted(term: &str) -> String {
    if needs_quotes(term) {
        quote(term)
    } else {
        term.to_string()
    }
}

pub(crate) fn render_generic(node: &QueryNode) -> String {
    match node {
        QueryNode::Term(t) => bare_or_quoted(t),
        QueryNode::Or(children) => {
            let inner: Vec<String> = children
                .iter()
                .map(|c| match c {
                    QueryNode::And(_) => format!("({})", render_generic(c)),
                    _ => render_generic(c),
                })
                .collect();
            format!("({})", inner.join(" OR "))
        }
        QueryNode::And(children) => children
            .iter()
            .map(|c| match c {
                QueryNode::Or(_) => render_generic(c),
                _ => format!("({})", render_generic(c)),
            })
            .collect::<Vec<_>>()
            .join(" AND "),
    }
}

fn render_web_plus(node: &QueryNode) -> String {
    fn operand(node: &QueryNode) -> String {
        match node {
            QueryNode::Term(t) => bare_or_quoted(t),
            QueryNode::Or(children) => {
                format!("({})", children.iter().map(operand).collect::<Vec<_>>().join(" OR "))
            }
            QueryNode::And(children) => {
                format!("({})", children.iter().map(operand).collect::<Vec<_>>().join(" AND "))
            }
        }
    }
    match node {
        QueryNode::And(children) => {
            children.iter().map(|c| format!("+{}", operand(c))).collect::<Vec<_>>().join(" ")
        }
        other => format!("+{}", operand(other)),
    }
}

fn render_phrase(node: &QueryNode) -> String {
    fn go(node: &QueryNode, nested: bool) -> String {
        match node {
            QueryNode::Term(t) => quote(t),
            QueryNode::Or(children) => {
                format!("({})", children.iter().map(|c| go(c, true)).collect::<Vec<_>>().join(" OR "))
            }
            QueryNode::And(children) => {
                let s = children.iter().map(|c| go(c, true)).collect::<Vec<_>>().join(" AND ");
                if nested {
                    format!("({s})")
                } else {
                    s
                }
            }
        }
    }
    go(node, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> QueryNode {
        QueryNode::and(["смартфон", "камера", "NFC", "производительность"].map(QueryNode::term))
    }

    #[test]
    fn generic_rendering() {
        assert_eq!(
            render_query(&sample(), Dialect::Generic),
            "(смартфон) AND (камера) AND (NFC) AND (производительность)"
        );
    }

    #[test]
    fn web_plus_rendering() {
        assert_eq!(render_query(&sample(), Dialect::WebPlus), "+смартфон +камера +NFC +производительность");
    }

    #[test]
    fn or_group_is_parenthesized() {
        let group = QueryNode::or([QueryNode::term("смартфон"), QueryNode::term("smartphone")]);
        assert_eq!(render_query(&group, Dialect::Generic), "(смартфон OR smartphone)");
        let q = QueryNode::and([group, QueryNode::term("NFC")]);
        assert_eq!(render_query(&q, Dialect::Generic), "(смартфон OR smartphone) AND (NFC)");
        assert_eq!(render_query(&q, Dialect::WebPlus), "+(смартфон OR smartphone) +NFC");
    }

    #[test]
    fn phrase_quoted_rendering() {
        let q = QueryNode::and([
            QueryNode::term("Galaxy S"),
            QueryNode::or([QueryNode::term("4G"), QueryNode::term("LTE")]),
        ]);
        assert_eq!(render_query(&q, Dialect::PhraseQuoted), r#""Galaxy S" AND ("4G" OR "LTE")"#);
    }

    #[test]
    fn multiword_terms_are_quoted() {
        let q = QueryNode::and([QueryNode::term("Galaxy S"), QueryNode::term("say \"hi\"")]);
        assert_eq!(render_query(&q, Dialect::Generic), r#"("Galaxy S") AND ("say \"hi\"")"#);
        assert_eq!(render_query(&q, Dialect::WebPlus), r#"+"Galaxy S" +"say \"hi\"""#);
    }

    #[test]
    fn unknown_dialect() {
        assert!(matches!("bing".parse::<Dialect>(), Err(QueryError::UnknownDialect(d)) if d == "bing"));
        assert!(render_query_named(&sample(), "nope").is_err());
        assert_eq!(render_query_named(&sample(), "web-plus").unwrap(), render_query(&sample(), Dialect::WebPlus));
    }
}
