//! Offline inverted index over title+abstract text, used as the
//! deterministic retrieval oracle for generated strategies.
//!
//! Tokenization is lowercase, split on non-alphanumeric characters, no
//! stemming. Multi-word phrases match via positional adjacency, so
//! `"heart failure"` hits documents where the two tokens are consecutive.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::query::{FieldTag, QueryNode};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("invalid input: duplicate doc_id `{0}`")]
    DuplicateDocId(String),
    #[error("invalid input: empty doc_id")]
    EmptyDocId,
    #[error("corpus line {line}: {message}")]
    CorpusParse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One corpus document, a stand-in for a PubMed citation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocRecord {
    pub doc_id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub year: i32,
}

/// Immutable positional index over a corpus. Rebuilding from the same
/// documents yields an identical index.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusIndex {
    /// token -> doc_id -> sorted token positions
    postings: HashMap<String, BTreeMap<String, Vec<u32>>>,
    universe: BTreeSet<String>,
    years: BTreeMap<String, i32>,
}

/// Lowercase and split on non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

impl CorpusIndex {
    /// Build the index. Document ids must be unique and non-empty.
    pub fn build(docs: &[DocRecord]) -> Result<Self, IndexError> {
        let mut postings: HashMap<String, BTreeMap<String, Vec<u32>>> = HashMap::new();
        let mut universe = BTreeSet::new();
        let mut years = BTreeMap::new();
        for doc in docs {
            if doc.doc_id.is_empty() {
                return Err(IndexError::EmptyDocId);
            }
            if !universe.insert(doc.doc_id.clone()) {
                return Err(IndexError::DuplicateDocId(doc.doc_id.clone()));
            }
            years.insert(doc.doc_id.clone(), doc.year);
            let text = format!("{} {}", doc.title, doc.abstract_text);
            for (pos, token) in tokenize(&text).into_iter().enumerate() {
                postings
                    .entry(token)
                    .or_default()
                    .entry(doc.doc_id.clone())
                    .or_default()
                    .push(pos as u32);
            }
        }
        Ok(CorpusIndex {
            postings,
            universe,
            years,
        })
    }

    /// All indexed doc ids.
    pub fn universe(&self) -> &BTreeSet<String> {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.universe.len()
    }

    pub fn is_empty(&self) -> bool {
        self.universe.is_empty()
    }

    pub fn year_of(&self, doc_id: &str) -> Option<i32> {
        self.years.get(doc_id).copied()
    }

    /// Documents containing the phrase: single tokens by posting lookup,
    /// multi-token phrases by positional adjacency.
    pub fn lookup_phrase(&self, phrase: &str) -> BTreeSet<String> {
        let tokens = tokenize(phrase);
        match tokens.len() {
            0 => BTreeSet::new(),
            1 => self
                .postings
                .get(&tokens[0])
                .map(|docs| docs.keys().cloned().collect())
                .unwrap_or_default(),
            _ => {
                let mut out = BTreeSet::new();
                let Some(first) = self.postings.get(&tokens[0]) else {
                    return out;
                };
                'docs: for (doc_id, first_positions) in first {
                    // all later tokens must appear at successive offsets
                    let mut rest = Vec::with_capacity(tokens.len() - 1);
                    for token in &tokens[1..] {
                        match self.postings.get(token).and_then(|d| d.get(doc_id)) {
                            Some(positions) => rest.push(positions),
                            None => continue 'docs,
                        }
                    }
                    let adjacent = first_positions.iter().any(|&start| {
                        rest.iter().enumerate().all(|(i, positions)| {
                            positions.binary_search(&(start + 1 + i as u32)).is_ok()
                        })
                    });
                    if adjacent {
                        out.insert(doc_id.clone());
                    }
                }
                out
            }
        }
    }
}

/// Evaluate a query against the index, returning matching doc ids.
///
/// Offline, the `[tiab]`, `[all]` and `[tw]` tags all read the indexed
/// title+abstract field; `[mh]` matches nothing because the corpus carries
/// no controlled vocabulary. NOT evaluates as set difference.
pub fn eval_query(query: &QueryNode, index: &CorpusIndex) -> BTreeSet<String> {
    match query {
        QueryNode::Term { phrase, tag } => match tag {
            FieldTag::MeshHeading => BTreeSet::new(),
            _ => index.lookup_phrase(phrase),
        },
        QueryNode::And(children) => {
            let mut iter = children.iter();
            let mut acc = match iter.next() {
                Some(first) => eval_query(first, index),
                None => return BTreeSet::new(),
            };
            for child in iter {
                let next = eval_query(child, index);
                acc = acc.intersection(&next).cloned().collect();
                if acc.is_empty() {
                    break;
                }
            }
            acc
        }
        QueryNode::Or(children) => {
            let mut acc = BTreeSet::new();
            for child in children {
                acc.extend(eval_query(child, index));
            }
            acc
        }
        QueryNode::Not { positive, negative } => {
            let pos = eval_query(positive, index);
            let neg = eval_query(negative, index);
            pos.difference(&neg).cloned().collect()
        }
    }
}

/// Read a JSON-lines corpus file (one [`DocRecord`] object per line; blank
/// lines are skipped). Errors carry the 1-based line number.
pub fn load_corpus(path: &Path) -> Result<Vec<DocRecord>, IndexError> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: DocRecord = serde_json::from_str(&line).map_err(|e| IndexError::CorpusParse {
            line: i + 1,
            message: e.to_string(),
        })?;
        docs.push(doc);
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::parse_pubmed;

    fn doc(id: &str, title: &str, abstract_text: &str) -> DocRecord {
        DocRecord {
            doc_id: id.into(),
            title: title.into(),
            abstract_text: abstract_text.into(),
            year: 2015,
        }
    }

    #[test]
    fn empty_corpus_builds_empty_index() {
        let idx = CorpusIndex::build(&[]).unwrap();
        assert!(idx.is_empty());
        assert!(idx.universe().is_empty());
    }

    #[test]
    fn tokens_are_lowercased_and_split_on_non_alphanumerics() {
        let idx = CorpusIndex::build(&[doc("d1", "Metformin in adults", "")]).unwrap();
        for token in ["metformin", "in", "adults"] {
            assert_eq!(
                idx.lookup_phrase(token),
                BTreeSet::from(["d1".to_string()]),
                "token {token}"
            );
        }
        assert!(idx.lookup_phrase("absent").is_empty());
    }

    #[test]
    fn phrase_requires_adjacent_tokens() {
        let idx = CorpusIndex::build(&[
            doc("adjacent", "Chronic heart failure outcomes", ""),
            doc("apart", "heart disease and renal failure", ""),
        ])
        .unwrap();
        assert_eq!(
            idx.lookup_phrase("heart failure"),
            BTreeSet::from(["adjacent".to_string()])
        );
    }

    #[test]
    fn phrase_matches_across_title_abstract_boundary_join() {
        // title ends with "heart", abstract starts with "failure": the
        // concatenation makes them adjacent, mirroring a [tiab] field scan
        let idx =
            CorpusIndex::build(&[doc("d1", "failing heart", "failure is discussed")]).unwrap();
        assert_eq!(
            idx.lookup_phrase("heart failure"),
            BTreeSet::from(["d1".to_string()])
        );
    }

    #[test]
    fn duplicate_doc_id_is_rejected() {
        let err = CorpusIndex::build(&[doc("d1", "a", ""), doc("d1", "b", "")]).unwrap_err();
        assert!(matches!(err, IndexError::DuplicateDocId(id) if id == "d1"));
    }

    #[test]
    fn rebuild_is_identical() {
        let docs = vec![
            doc("d1", "alpha beta", "gamma"),
            doc("d2", "beta", "delta beta"),
        ];
        assert_eq!(
            CorpusIndex::build(&docs).unwrap(),
            CorpusIndex::build(&docs).unwrap()
        );
    }

    #[test]
    fn and_intersects_or_unions() {
        let idx = CorpusIndex::build(&[
            doc("1", "alpha", ""),
            doc("2", "alpha beta", ""),
            doc("3", "beta", ""),
        ])
        .unwrap();
        let and = parse_pubmed("alpha[tiab] AND beta[tiab]").unwrap();
        assert_eq!(eval_query(&and, &idx), BTreeSet::from(["2".to_string()]));
        let or = parse_pubmed("alpha[tiab] OR beta[tiab]").unwrap();
        assert_eq!(eval_query(&or, &idx), idx.universe().clone());
    }

    #[test]
    fn not_is_set_difference() {
        let idx =
            CorpusIndex::build(&[doc("1", "coffee", ""), doc("2", "coffee decaf", "")]).unwrap();
        let q = parse_pubmed("coffee[tiab] NOT decaf[tiab]").unwrap();
        assert_eq!(eval_query(&q, &idx), BTreeSet::from(["1".to_string()]));
    }

    #[test]
    fn self_negation_is_empty() {
        let idx = CorpusIndex::build(&[doc("1", "anything at all", "")]).unwrap();
        let q = parse_pubmed("anything[tiab] NOT anything[tiab]").unwrap();
        assert!(eval_query(&q, &idx).is_empty());
    }

    #[test]
    fn mesh_tag_matches_nothing_offline() {
        let idx = CorpusIndex::build(&[doc("1", "humans", "")]).unwrap();
        let q = parse_pubmed("humans[mh]").unwrap();
        assert!(eval_query(&q, &idx).is_empty());
        let q = parse_pubmed("humans[tw]").unwrap();
        assert_eq!(eval_query(&q, &idx).len(), 1);
    }

    #[test]
    fn corpus_jsonl_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        let docs = vec![doc("d1", "alpha", "beta"), doc("d2", "gamma", "")];
        let lines: Vec<String> = docs
            .iter()
            .map(|d| serde_json::to_string(d).unwrap())
            .collect();
        std::fs::write(&path, lines.join("\n")).unwrap();
        assert_eq!(load_corpus(&path).unwrap(), docs);
    }

    #[test]
    fn corpus_parse_error_carries_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        std::fs::write(
            &path,
            "{\"doc_id\":\"a\",\"title\":\"t\",\"abstract\":\"\",\"year\":2000}\nnot json\n",
        )
        .unwrap();
        let err = load_corpus(&path).unwrap_err();
        assert!(matches!(err, IndexError::CorpusParse { line: 2, .. }));
    }
}
