//! Recursive-descent parser for PubMed-syntax Boolean queries.
//!
//! Precedence is NOT > AND > OR, all left-associative, so
//! `a[tiab] OR b[tiab] AND c[tiab]` parses as `a OR (b AND c)`. The
//! returned tree is normalized (`a AND b AND c` comes back as one
//! three-child And, not a left-leaning nest), which gives the roundtrip
//! guarantee `parse(serialize(q)) == normalize(q)`.
//!
//! Untagged terms are accepted and default to `[all]`, matching how PubMed
//! treats bare terms; the serializer always emits explicit tags.

use thiserror::Error;

use super::{FieldTag, QueryNode};

/// Syntax error with the byte offset of the offending input and the set of
/// tokens that would have been accepted there.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {offset}: expected {}, found {found}", expected.join(" | "))]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl ParseError {
    fn new(offset: usize, expected: &[&str], found: impl Into<String>) -> Self {
        ParseError {
            offset,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: found.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    And,
    Or,
    Not,
    Phrase(String),
    Tag(FieldTag),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::And => "`AND`".into(),
            Tok::Or => "`OR`".into(),
            Tok::Not => "`NOT`".into(),
            Tok::Phrase(p) => format!("phrase `{p}`"),
            Tok::Tag(t) => format!("tag `{}`", t.token()),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokenize(src: &'a str) -> Result<Vec<(usize, Tok)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            lx.skip_ws();
            let start = lx.pos;
            let Some(c) = lx.peek_char() else {
                out.push((start, Tok::Eof));
                return Ok(out);
            };
            let tok = match c {
                '(' => {
                    lx.pos += 1;
                    Tok::LParen
                }
                ')' => {
                    lx.pos += 1;
                    Tok::RParen
                }
                '"' => lx.quoted_phrase()?,
                '[' => lx.tag()?,
                _ => lx.bareword(),
            };
            out.push((start, tok));
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek_char() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn quoted_phrase(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        self.pos += 1; // opening quote
        let rest = &self.src[self.pos..];
        match rest.find('"') {
            Some(end) => {
                let phrase = &rest[..end];
                self.pos += end + 1;
                if phrase.trim().is_empty() {
                    return Err(ParseError::new(
                        start,
                        &["non-empty phrase"],
                        "empty phrase",
                    ));
                }
                Ok(Tok::Phrase(phrase.to_string()))
            }
            None => Err(ParseError::new(
                self.src.len(),
                &["closing `\"`"],
                "end of input",
            )),
        }
    }

    fn tag(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        self.pos += 1; // opening bracket
        let rest = &self.src[self.pos..];
        match rest.find(']') {
            Some(end) => {
                let name = &rest[..end];
                self.pos += end + 1;
                match FieldTag::from_name(name) {
                    Some(tag) => Ok(Tok::Tag(tag)),
                    None => Err(ParseError::new(
                        start,
                        &["[tiab]", "[mh]", "[all]", "[tw]"],
                        format!("[{name}]"),
                    )),
                }
            }
            None => Err(ParseError::new(
                self.src.len(),
                &["closing `]`"],
                "end of input",
            )),
        }
    }

    fn bareword(&mut self) -> Tok {
        let start = self.pos;
        while let Some(c) = self.peek_char() {
            if c.is_whitespace() || matches!(c, '(' | ')' | '[' | '"') {
                break;
            }
            self.pos += c.len_utf8();
        }
        let word = &self.src[start..self.pos];
        // operators are case-sensitive; lowercase `or` is an ordinary term
        match word {
            "AND" => Tok::And,
            "OR" => Tok::Or,
            "NOT" => Tok::Not,
            _ => Tok::Phrase(word.to_string()),
        }
    }
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    cursor: usize,
}

impl Parser {
    fn peek(&self) -> &(usize, Tok) {
        &self.tokens[self.cursor]
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.tokens[self.cursor].clone();
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        t
    }

    fn or_expr(&mut self) -> Result<QueryNode, ParseError> {
        let mut children = vec![self.and_expr()?];
        while matches!(self.peek().1, Tok::Or) {
            self.bump();
            children.push(self.and_expr()?);
        }
        Ok(if children.len() == 1 {
            children.pop().expect("len checked")
        } else {
            QueryNode::Or(children)
        })
    }

    fn and_expr(&mut self) -> Result<QueryNode, ParseError> {
        let mut children = vec![self.not_expr()?];
        while matches!(self.peek().1, Tok::And) {
            self.bump();
            children.push(self.not_expr()?);
        }
        Ok(if children.len() == 1 {
            children.pop().expect("len checked")
        } else {
            QueryNode::And(children)
        })
    }

    fn not_expr(&mut self) -> Result<QueryNode, ParseError> {
        let mut left = self.atom()?;
        while matches!(self.peek().1, Tok::Not) {
            self.bump();
            let right = self.atom()?;
            left = QueryNode::not(left, right);
        }
        Ok(left)
    }

    fn atom(&mut self) -> Result<QueryNode, ParseError> {
        let (offset, tok) = self.bump();
        match tok {
            Tok::LParen => {
                let inner = self.or_expr()?;
                let (off, next) = self.bump();
                if next != Tok::RParen {
                    return Err(ParseError::new(
                        off,
                        &["`)`", "`AND`", "`OR`", "`NOT`"],
                        next.describe(),
                    ));
                }
                Ok(inner)
            }
            Tok::Phrase(phrase) => {
                let tag = if let Tok::Tag(tag) = self.peek().1 {
                    self.bump();
                    tag
                } else {
                    FieldTag::AllFields
                };
                QueryNode::term(phrase.clone(), tag).map_err(|_| {
                    ParseError::new(offset, &["non-empty phrase"], format!("`{phrase}`"))
                })
            }
            other => Err(ParseError::new(offset, &["`(`", "term"], other.describe())),
        }
    }
}

/// Parse PubMed-syntax text into a normalized [`QueryNode`].
pub fn parse_pubmed(input: &str) -> Result<QueryNode, ParseError> {
    let tokens = Lexer::tokenize(input)?;
    let mut parser = Parser { tokens, cursor: 0 };
    let node = parser.or_expr()?;
    let (offset, trailing) = parser.peek().clone();
    if trailing != Tok::Eof {
        return Err(ParseError::new(
            offset,
            &["`AND`", "`OR`", "`NOT`", "end of input"],
            trailing.describe(),
        ));
    }
    Ok(node.normalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::serialize_pubmed;

    fn t(phrase: &str) -> QueryNode {
        QueryNode::term(phrase, FieldTag::TitleAbstract).unwrap()
    }

    #[test]
    fn single_term() {
        assert_eq!(parse_pubmed("metformin[tiab]").unwrap(), t("metformin"));
    }

    #[test]
    fn quoted_phrase_roundtrips() {
        assert_eq!(
            parse_pubmed(r#""heart failure"[tiab]"#).unwrap(),
            t("heart failure")
        );
    }

    #[test]
    fn untagged_term_defaults_to_all_fields() {
        assert_eq!(
            parse_pubmed("metformin").unwrap(),
            QueryNode::term("metformin", FieldTag::AllFields).unwrap()
        );
    }

    #[test]
    fn parenthesized_or_then_and() {
        let q = parse_pubmed("(a[tiab] OR b[tiab]) AND c[tiab]").unwrap();
        assert_eq!(
            q,
            QueryNode::And(vec![QueryNode::Or(vec![t("a"), t("b")]), t("c")])
        );
    }

    #[test]
    fn and_binds_tighter_than_or() {
        // precedence oracle: fully parenthesized form of the same input
        let flat = parse_pubmed("a[tiab] OR b[tiab] AND c[tiab]").unwrap();
        let explicit = parse_pubmed("a[tiab] OR (b[tiab] AND c[tiab])").unwrap();
        assert_eq!(flat, explicit);
        assert_eq!(
            flat,
            QueryNode::Or(vec![t("a"), QueryNode::And(vec![t("b"), t("c")])])
        );
    }

    #[test]
    fn not_binds_tighter_than_and() {
        let q = parse_pubmed("a[tiab] NOT b[tiab] AND c[tiab]").unwrap();
        assert_eq!(
            q,
            QueryNode::And(vec![QueryNode::not(t("a"), t("b")), t("c")])
        );
    }

    #[test]
    fn not_is_left_associative() {
        let q = parse_pubmed("a[tiab] NOT b[tiab] NOT c[tiab]").unwrap();
        assert_eq!(q, QueryNode::not(QueryNode::not(t("a"), t("b")), t("c")));
    }

    #[test]
    fn chained_and_flattens() {
        let q = parse_pubmed("a[tiab] AND b[tiab] AND c[tiab]").unwrap();
        assert_eq!(q, QueryNode::And(vec![t("a"), t("b"), t("c")]));
    }

    #[test]
    fn lowercase_operators_are_ordinary_terms() {
        assert_eq!(
            parse_pubmed("or[tiab]").unwrap(),
            QueryNode::term("or", FieldTag::TitleAbstract).unwrap()
        );
        // adjacent terms with no connecting operator do not parse
        assert!(parse_pubmed("bed or breakfast").is_err());
    }

    #[test]
    fn error_reports_offset_and_expected_set() {
        let err = parse_pubmed("(a[tiab] OR ").unwrap_err();
        assert_eq!(err.offset, 12);
        assert!(err.expected.contains(&"`(`".to_string()));

        let err = parse_pubmed("a[xyz]").unwrap_err();
        assert_eq!(err.offset, 1);
        assert_eq!(err.found, "[xyz]");
    }

    #[test]
    fn unbalanced_paren_is_an_error() {
        let err = parse_pubmed("(a[tiab] OR b[tiab]").unwrap_err();
        assert!(err.expected.iter().any(|e| e.contains(')')));
    }

    #[test]
    fn serialize_then_parse_equals_normalize() {
        let q = QueryNode::And(vec![
            QueryNode::And(vec![t("a"), t("b")]),
            QueryNode::Or(vec![t("c d"), t("c d"), t("e")]),
        ]);
        let reparsed = parse_pubmed(&serialize_pubmed(&q)).unwrap();
        assert_eq!(reparsed, q.normalize());
    }
}
