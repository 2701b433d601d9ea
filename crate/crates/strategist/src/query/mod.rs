//! Boolean query AST, PubMed-syntax serializer/parser, structural
//! normalization, and the per-study term-set synthesis baseline.
//!
//! [`QueryNode`] is the central value type of the crate: an immutable tree
//! of terms combined with AND / OR / NOT, each term carrying a PubMed field
//! tag. Trees are built through validating constructors, rendered with
//! [`serialize_pubmed`], and re-read with [`parse_pubmed`].

mod parse;
mod serialize;

pub use parse::{parse_pubmed, ParseError};
pub use serialize::serialize_pubmed;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Error raised by query construction and validation.
#[derive(Debug, Error)]
pub enum QueryError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// PubMed field restriction attached to a term.
///
/// Each variant serializes to exactly one canonical token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldTag {
    #[serde(rename = "tiab")]
    TitleAbstract,
    #[serde(rename = "mh")]
    MeshHeading,
    #[serde(rename = "all")]
    AllFields,
    #[serde(rename = "tw")]
    TextWord,
}

impl FieldTag {
    /// The canonical bracketed token, e.g. `[tiab]`.
    pub fn token(self) -> &'static str {
        match self {
            FieldTag::TitleAbstract => "[tiab]",
            FieldTag::MeshHeading => "[mh]",
            FieldTag::AllFields => "[all]",
            FieldTag::TextWord => "[tw]",
        }
    }

    /// Inverse of [`FieldTag::token`], accepting the bare tag name
    /// without brackets (`tiab`, `mh`, `all`, `tw`).
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "tiab" => Some(FieldTag::TitleAbstract),
            "mh" => Some(FieldTag::MeshHeading),
            "all" => Some(FieldTag::AllFields),
            "tw" => Some(FieldTag::TextWord),
            _ => None,
        }
    }
}

impl std::fmt::Display for FieldTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

impl std::str::FromStr for FieldTag {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FieldTag::from_name(s.trim_matches(|c| c == '[' || c == ']'))
            .ok_or_else(|| QueryError::InvalidInput(format!("unknown field tag `{s}`")))
    }
}

/// An immutable Boolean query tree.
///
/// Invariants (enforced by the constructors, checkable via
/// [`QueryNode::validate`]):
/// - `And` / `Or` nodes have at least 2 children;
/// - term phrases are non-empty and contain no double-quote characters.
///
/// Equality is structural; compare normalized trees (see
/// [`QueryNode::normalize`]) when order-insensitive flattened equality is
/// wanted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryNode {
    Term {
        phrase: String,
        tag: FieldTag,
    },
    And(Vec<QueryNode>),
    Or(Vec<QueryNode>),
    Not {
        positive: Box<QueryNode>,
        negative: Box<QueryNode>,
    },
}

impl QueryNode {
    /// A single tagged term. The phrase must be non-empty and free of
    /// double quotes (the serialization grammar has no escape syntax).
    pub fn term(phrase: impl Into<String>, tag: FieldTag) -> Result<Self, QueryError> {
        let phrase = phrase.into();
        if phrase.trim().is_empty() {
            return Err(QueryError::InvalidInput("term phrase is empty".into()));
        }
        if phrase.contains('"') {
            return Err(QueryError::InvalidInput(format!(
                "term phrase `{phrase}` contains a double quote"
            )));
        }
        Ok(QueryNode::Term { phrase, tag })
    }

    /// Conjunction of `children`. A single child is returned unchanged; an
    /// empty list is an error.
    pub fn and(children: Vec<QueryNode>) -> Result<Self, QueryError> {
        match children.len() {
            0 => Err(QueryError::InvalidInput("AND of zero children".into())),
            1 => Ok(children.into_iter().next().expect("len checked")),
            _ => Ok(QueryNode::And(children)),
        }
    }

    /// Disjunction of `children`, with the same collapse rule as
    /// [`QueryNode::and`].
    pub fn or(children: Vec<QueryNode>) -> Result<Self, QueryError> {
        match children.len() {
            0 => Err(QueryError::InvalidInput("OR of zero children".into())),
            1 => Ok(children.into_iter().next().expect("len checked")),
            _ => Ok(QueryNode::Or(children)),
        }
    }

    /// `positive NOT negative`: documents matching `positive` minus those
    /// matching `negative`.
    pub fn not(positive: QueryNode, negative: QueryNode) -> Self {
        QueryNode::Not {
            positive: Box::new(positive),
            negative: Box::new(negative),
        }
    }

    /// Check the structural invariants of a tree that came from outside the
    /// constructors (e.g. deserialized JSON).
    pub fn validate(&self) -> Result<(), QueryError> {
        match self {
            QueryNode::Term { phrase, .. } => {
                if phrase.trim().is_empty() {
                    return Err(QueryError::InvalidInput("term phrase is empty".into()));
                }
                if phrase.contains('"') {
                    return Err(QueryError::InvalidInput(format!(
                        "term phrase `{phrase}` contains a double quote"
                    )));
                }
                Ok(())
            }
            QueryNode::And(children) | QueryNode::Or(children) => {
                if children.len() < 2 {
                    return Err(QueryError::InvalidInput(
                        "AND/OR node has fewer than 2 children".into(),
                    ));
                }
                children.iter().try_for_each(QueryNode::validate)
            }
            QueryNode::Not { positive, negative } => {
                positive.validate()?;
                negative.validate()
            }
        }
    }

    /// Structural normalization: flattens nested same-operator nodes,
    /// removes exact-duplicate siblings (first occurrence wins), and
    /// collapses single-child AND/OR. Retrieval semantics are preserved;
    /// no distributivity or De Morgan rewriting is applied, so normalized
    /// queries stay human-auditable.
    pub fn normalize(self) -> Self {
        match self {
            term @ QueryNode::Term { .. } => term,
            QueryNode::Not { positive, negative } => {
                QueryNode::not(positive.normalize(), negative.normalize())
            }
            QueryNode::And(children) => {
                let mut flat: Vec<QueryNode> = Vec::with_capacity(children.len());
                for child in children {
                    match child.normalize() {
                        QueryNode::And(grandchildren) => flat.extend(grandchildren),
                        other => flat.push(other),
                    }
                }
                dedup_in_order(&mut flat);
                match flat.len() {
                    1 => flat.pop().expect("len checked"),
                    _ => QueryNode::And(flat),
                }
            }
            QueryNode::Or(children) => {
                let mut flat: Vec<QueryNode> = Vec::with_capacity(children.len());
                for child in children {
                    match child.normalize() {
                        QueryNode::Or(grandchildren) => flat.extend(grandchildren),
                        other => flat.push(other),
                    }
                }
                dedup_in_order(&mut flat);
                match flat.len() {
                    1 => flat.pop().expect("len checked"),
                    _ => QueryNode::Or(flat),
                }
            }
        }
    }

    /// Iterate every term phrase in the tree, depth-first.
    pub fn phrases(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_phrases(&mut out);
        out
    }

    fn collect_phrases<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            QueryNode::Term { phrase, .. } => out.push(phrase),
            QueryNode::And(children) | QueryNode::Or(children) => {
                children.iter().for_each(|c| c.collect_phrases(out))
            }
            QueryNode::Not { positive, negative } => {
                positive.collect_phrases(out);
                negative.collect_phrases(out);
            }
        }
    }
}

impl std::fmt::Display for QueryNode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&serialize_pubmed(self))
    }
}

/// Remove exact structural duplicates, keeping the first occurrence.
/// Fan-out is small in practice, so the quadratic scan is fine.
fn dedup_in_order(nodes: &mut Vec<QueryNode>) {
    let mut seen: Vec<QueryNode> = Vec::with_capacity(nodes.len());
    nodes.retain(|n| {
        if seen.contains(n) {
            false
        } else {
            seen.push(n.clone());
            true
        }
    });
}

/// Per-study population and intervention term sets for the synthetic-query
/// baseline: within a study terms are ANDed, across studies the per-study
/// conjunctions are ORed, and the population and intervention sides are
/// finally ANDed together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeadsStudy {
    pub population_terms: Vec<String>,
    pub intervention_terms: Vec<String>,
}

/// A validated, non-empty list of [`LeadsStudy`] entries. Each per-study
/// term list has between 1 and [`LeadsTermSets::MAX_TERMS_PER_STUDY`]
/// phrases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeadsTermSets {
    studies: Vec<LeadsStudy>,
}

impl LeadsTermSets {
    /// Upper bound on per-study term-list length.
    pub const MAX_TERMS_PER_STUDY: usize = 10;

    pub fn new(studies: Vec<LeadsStudy>) -> Result<Self, QueryError> {
        if studies.is_empty() {
            return Err(QueryError::InvalidInput(
                "term sets contain no studies".into(),
            ));
        }
        for (i, study) in studies.iter().enumerate() {
            for (role, terms) in [
                ("population", &study.population_terms),
                ("intervention", &study.intervention_terms),
            ] {
                if terms.is_empty() {
                    return Err(QueryError::InvalidInput(format!(
                        "study {i} has no {role} terms"
                    )));
                }
                if terms.len() > Self::MAX_TERMS_PER_STUDY {
                    return Err(QueryError::InvalidInput(format!(
                        "study {i} has {} {role} terms (max {})",
                        terms.len(),
                        Self::MAX_TERMS_PER_STUDY
                    )));
                }
                for t in terms {
                    // term() re-checks, but fail fast with study context
                    if t.trim().is_empty() || t.contains('"') {
                        return Err(QueryError::InvalidInput(format!(
                            "study {i} has an invalid {role} term `{t}`"
                        )));
                    }
                }
            }
        }
        Ok(Self { studies })
    }

    pub fn studies(&self) -> &[LeadsStudy] {
        &self.studies
    }
}

/// OR a concept's keywords into one block: a single phrase becomes a bare
/// term, multiple phrases an OR of terms in the given order. Duplicates are
/// removed case-insensitively, keeping the first occurrence.
pub fn build_concept_block(keywords: &[String], tag: FieldTag) -> Result<QueryNode, QueryError> {
    let mut seen: Vec<String> = Vec::new();
    let mut terms: Vec<QueryNode> = Vec::new();
    for kw in keywords {
        let folded = kw.to_lowercase();
        if seen.contains(&folded) {
            continue;
        }
        seen.push(folded);
        terms.push(QueryNode::term(kw.clone(), tag)?);
    }
    if terms.is_empty() {
        return Err(QueryError::InvalidInput("empty keyword set".into()));
    }
    QueryNode::or(terms)
}

/// AND concept blocks together in order. A single block is returned
/// unchanged.
pub fn combine_concepts(blocks: Vec<QueryNode>) -> Result<QueryNode, QueryError> {
    if blocks.is_empty() {
        return Err(QueryError::InvalidInput(
            "no concept blocks to combine".into(),
        ));
    }
    QueryNode::and(blocks)
}

/// Synthesize the baseline query from per-study term sets:
/// `(OR over studies of AND(population terms)) AND (OR over studies of
/// AND(intervention terms))`, with single-element AND/OR collapsed.
pub fn leads_synthesize(sets: &LeadsTermSets, tag: FieldTag) -> QueryNode {
    let side = |pick: fn(&LeadsStudy) -> &Vec<String>| -> QueryNode {
        let per_study: Vec<QueryNode> = sets
            .studies()
            .iter()
            .map(|study| {
                let terms: Vec<QueryNode> = pick(study)
                    .iter()
                    .map(|t| QueryNode::term(t.clone(), tag).expect("validated at construction"))
                    .collect();
                QueryNode::and(terms).expect("study term list is non-empty")
            })
            .collect();
        QueryNode::or(per_study).expect("study list is non-empty")
    };
    let population = side(|s| &s.population_terms);
    let intervention = side(|s| &s.intervention_terms);
    QueryNode::And(vec![population, intervention])
}
