//! Recursive-descent parser for the generic dialect.
//!
//! ```text
//! query   := or_expr EOF
//! or_expr := and_expr ("OR" and_expr)*
//! and_expr:= primary ("AND" primary)*
//! primary := TERM | QUOTED | "(" or_expr ")"
//! ```
//!
//! `AND` binds tighter than `OR`. Juxtaposed terms without an operator are a
//! syntax error; there is no implicit conjunction.

use super::expr::QueryNode;
use super::QueryError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    And,
    Or,
    Term(String),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> QueryError {
    QueryError::Syntax { offset, message: message.into() }
}

fn tokenize(s: &str) -> Result<Vec<Token>, QueryError> {
    let mut tokens = Vec::new();
    let mut chars = s.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        match c {
            '(' => {
                chars.next();
                tokens.push(Token { tok: Tok::LParen, offset: start });
            }
            ')' => {
                chars.next();
                tokens.push(Token { tok: Tok::RParen, offset: start });
            }
            '"' => {
                chars.next();
                let mut text = String::new();
                let mut closed = false;
                while let Some((i, c)) = chars.next() {
                    match c {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => match chars.next() {
                            Some((_, e)) => text.push(e),
                            None => return Err(syntax(i, "dangling escape")),
                        },
                        other => text.push(other),
                    }
                }
                if !closed {
                    return Err(syntax(start, "unterminated quoted term"));
                }
                tokens.push(Token { tok: Tok::Term(text), offset: start });
            }
            _ => {
                let mut end = s.len();
                while let Some(&(i, c)) = chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '"') {
                        end = i;
                        break;
                    }
                    chars.next();
                }
                let word = &s[start..end];
                let tok = match word {
                    "AND" => Tok::And,
                    "OR" => Tok::Or,
                    _ if word.contains('\\') => return Err(syntax(start, "backslash outside quotes")),
                    _ => Tok::Term(word.to_string()),
                };
                tokens.push(Token { tok, offset: start });
            }
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn or_expr(&mut self) -> Result<QueryNode, QueryError> {
        let mut items = vec![self.and_expr(None)?];
        while let Some(t) = self.peek() {
            if t.tok != Tok::Or {
                break;
            }
            let op = self.tokens[self.pos].clone();
            self.pos += 1;
            items.push(self.and_expr(Some(&op))?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { QueryNode::Or(items) })
    }

    fn and_expr(&mut self, after: Option<&Token>) -> Result<QueryNode, QueryError> {
        let mut items = vec![self.primary(after)?];
        while let Some(t) = self.peek() {
            if t.tok != Tok::And {
                break;
            }
            let op = self.tokens[self.pos].clone();
            self.pos += 1;
            items.push(self.primary(Some(&op))?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { QueryNode::And(items) })
    }

    fn primary(&mut self, after: Option<&Token>) -> Result<QueryNode, QueryError> {
        let Some(tok) = self.tokens.get(self.pos).cloned() else {
            return Err(match after {
                Some(op) => syntax(op.offset, format!("operator {} has no right operand", op_name(&op.tok))),
                None => syntax(self.len, "expected a term or '('"),
            });
        };
        self.pos += 1;
        match tok.tok {
            Tok::Term(t) => Ok(QueryNode::Term(t)),
            Tok::LParen => {
                let inner = self.or_expr()?;
                match self.peek() {
                    Some(Token { tok: Tok::RParen, .. }) => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    Some(t) => Err(syntax(t.offset, "expected ')'")),
                    None => Err(syntax(tok.offset, "unclosed '('")),
                }
            }
            Tok::RParen => Err(syntax(tok.offset, "unexpected ')'")),
            Tok::And | Tok::Or => Err(syntax(tok.offset, format!("unexpected operator {}", op_name(&tok.tok)))),
        }
    }
}

fn op_name(tok: &Tok) -> &'static str {
    match tok {
        Tok::And => "AND",
        Tok::Or => "OR",
        _ => "?",
    }
}

/// Parses a generic-dialect query into its canonical tree.
pub fn parse_query(s: &str) -> Result<QueryNode, QueryError> {
    let tokens = tokenize(s)?;
    let mut parser = Parser { tokens, pos: 0, len: s.len() };
    let node = parser.or_expr()?;
    if let Some(t) = parser.peek() {
        let message = match t.tok {
            Tok::RParen => "unbalanced ')'",
            _ => "expected AND, OR or end of query",
        };
        return Err(syntax(t.offset, message));
    }
    Ok(node.canonical())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::querygen::dialect::{render_query, Dialect};

    fn t(s: &str) -> QueryNode {
        QueryNode::term(s)
    }

    #[test]
    fn grammar_case() {
        let q = parse_query("(a) AND (b OR c)").unwrap();
        assert_eq!(q, QueryNode::and([t("a"), QueryNode::or([t("b"), t("c")])]).canonical());
        assert_eq!(render_query(&q, Dialect::Generic), "(b OR c) AND (a)");
    }

    #[test]
    fn trailing_operator() {
        match parse_query("a AND") {
            Err(QueryError::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn error_offsets() {
        let offset = |s: &str| match parse_query(s) {
            Err(QueryError::Syntax { offset, .. }) => offset,
            other => panic!("{s}: {other:?}"),
        };
        assert_eq!(offset(""), 0);
        assert_eq!(offset("a b"), 2);
        assert_eq!(offset("(a AND b"), 0);
        assert_eq!(offset("a)"), 1);
        assert_eq!(offset("OR a"), 0);
        assert_eq!(offset("a AND \"x"), 6);
        // byte offsets, not char offsets
        assert_eq!(offset("камера камера"), "камера ".len());
    }

    #[test]
    fn and_binds_tighter_than_or() {
        let q = parse_query("a AND b OR c").unwrap();
        assert_eq!(q, QueryNode::or([QueryNode::and([t("a"), t("b")]), t("c")]).canonical());
    }

    #[test]
    fn quoted_terms_and_escapes() {
        let q = parse_query(r#"("Galaxy S") AND ("a \"b\" \\ c")"#).unwrap();
        assert_eq!(q, QueryNode::and([t("Galaxy S"), t(r#"a "b" \ c"#)]).canonical());
        let quoted_kw = parse_query(r#""AND" OR x"#).unwrap();
        assert_eq!(quoted_kw, QueryNode::or([t("AND"), t("x")]));
    }

    #[test]
    fn render_parse_identity_on_canonical() {
        let q = QueryNode::and([
            QueryNode::or([t("смартфон"), t("smartphone")]),
            t("Galaxy S"),
            QueryNode::or([QueryNode::and([t("x"), t("y")]), t("z")]),
        ])
        .canonical();
        let text = render_query(&q, Dialect::Generic);
        assert_eq!(parse_query(&text).unwrap(), q);
    }
}
