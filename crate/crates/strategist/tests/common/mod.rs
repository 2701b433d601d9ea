//! Shared test support: brute-force retrieval oracles, random query/corpus
//! generators, the scripted chat provider, and testdata paths.
//!
//! The oracles re-derive retrieval semantics from first principles — a
//! per-document predicate over a naive token scan — and share no code with
//! the indexed evaluator they check.

#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use strategist::llm::{ChatProvider, ChatRequest, GatewayError};
use strategist::query::{FieldTag, LeadsStudy, LeadsTermSets, QueryNode};
use strategist::retrieval::DocRecord;

// ------------------------------------------------------------------- paths

pub fn testdata_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("testdata")
}

pub fn fixtures_dir() -> PathBuf {
    testdata_dir().join("fixtures/llm")
}

pub fn corpus_path() -> PathBuf {
    testdata_dir().join("corpus.jsonl")
}

pub fn manifest_path() -> PathBuf {
    testdata_dir().join("reviews.jsonl")
}

pub fn golden_dir() -> PathBuf {
    testdata_dir().join("golden")
}

pub fn corrected_objectives_path() -> PathBuf {
    testdata_dir().join("corrected_objectives.json")
}

// ----------------------------------------------------------------- oracles

/// Tokenize the way the spec defines the offline field: lowercase, split
/// on non-alphanumerics. Written independently of the library's indexer.
pub fn oracle_tokens(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Does this document contain the phrase as a contiguous token run?
pub fn oracle_phrase_in_doc(phrase: &str, doc: &DocRecord) -> bool {
    let needle = oracle_tokens(phrase);
    if needle.is_empty() {
        return false;
    }
    let haystack = oracle_tokens(&format!("{} {}", doc.title, doc.abstract_text));
    haystack
        .windows(needle.len())
        .any(|w| w == needle.as_slice())
}

/// Per-document Boolean predicate: the independent route against which the
/// indexed evaluator is checked.
pub fn oracle_doc_matches(query: &QueryNode, doc: &DocRecord) -> bool {
    match query {
        QueryNode::Term { phrase, tag } => match tag {
            FieldTag::MeshHeading => false,
            _ => oracle_phrase_in_doc(phrase, doc),
        },
        QueryNode::And(children) => children.iter().all(|c| oracle_doc_matches(c, doc)),
        QueryNode::Or(children) => children.iter().any(|c| oracle_doc_matches(c, doc)),
        QueryNode::Not { positive, negative } => {
            oracle_doc_matches(positive, doc) && !oracle_doc_matches(negative, doc)
        }
    }
}

pub fn oracle_eval(query: &QueryNode, docs: &[DocRecord]) -> BTreeSet<String> {
    docs.iter()
        .filter(|d| oracle_doc_matches(query, d))
        .map(|d| d.doc_id.clone())
        .collect()
}

/// Set-algebra route for the per-study synthesis:
/// `(∪_n ∩_m docs(p_nm)) ∩ (∪_n ∩_m docs(i_nm))`.
pub fn oracle_leads_eval(sets: &LeadsTermSets, docs: &[DocRecord]) -> BTreeSet<String> {
    let term_docs = |term: &str| -> BTreeSet<String> {
        docs.iter()
            .filter(|d| oracle_phrase_in_doc(term, d))
            .map(|d| d.doc_id.clone())
            .collect()
    };
    let side = |pick: fn(&LeadsStudy) -> &Vec<String>| -> BTreeSet<String> {
        let mut union = BTreeSet::new();
        for study in sets.studies() {
            let mut terms = pick(study).iter();
            let mut inter = term_docs(terms.next().expect("study terms are non-empty"));
            for term in terms {
                let next = term_docs(term);
                inter = inter.intersection(&next).cloned().collect();
            }
            union.extend(inter);
        }
        union
    };
    let population = side(|s| &s.population_terms);
    let intervention = side(|s| &s.intervention_terms);
    population.intersection(&intervention).cloned().collect()
}

// -------------------------------------------------------------- generators

pub const VOCAB: [&str; 24] = [
    "alpha",
    "beta",
    "gamma",
    "delta",
    "epsilon",
    "zeta",
    "theta",
    "kappa",
    "lambda",
    "sigma",
    "omega",
    "trial",
    "cohort",
    "therapy",
    "placebo",
    "outcome",
    "adults",
    "children",
    "chronic",
    "acute",
    "renal",
    "cardiac",
    "hepatic",
    "screening",
];

pub fn random_phrase(rng: &mut ChaCha8Rng) -> String {
    let word = |rng: &mut ChaCha8Rng| VOCAB[rng.random_range(0..VOCAB.len())];
    if rng.random_bool(0.3) {
        format!("{} {}", word(rng), word(rng))
    } else {
        word(rng).to_string()
    }
}

fn random_tag(rng: &mut ChaCha8Rng) -> FieldTag {
    match rng.random_range(0..10) {
        0 => FieldTag::AllFields,
        1 => FieldTag::TextWord,
        2 => FieldTag::MeshHeading,
        _ => FieldTag::TitleAbstract,
    }
}

/// Random query tree with bounded depth and fan-out (depth ≤ 6 from the
/// callers' budgets, fan-out ≤ 8).
pub fn random_ast(rng: &mut ChaCha8Rng, depth: u32) -> QueryNode {
    if depth == 0 || rng.random_bool(0.4) {
        return QueryNode::term(random_phrase(rng), random_tag(rng)).expect("vocab phrases valid");
    }
    let fan_out = |rng: &mut ChaCha8Rng| {
        if rng.random_bool(0.1) {
            rng.random_range(5..=8)
        } else {
            rng.random_range(2..=4)
        }
    };
    match rng.random_range(0..3) {
        0 => {
            let n = fan_out(rng);
            QueryNode::and((0..n).map(|_| random_ast(rng, depth - 1)).collect())
                .expect("non-empty children")
        }
        1 => {
            let n = fan_out(rng);
            QueryNode::or((0..n).map(|_| random_ast(rng, depth - 1)).collect())
                .expect("non-empty children")
        }
        _ => QueryNode::not(random_ast(rng, depth - 1), random_ast(rng, depth - 1)),
    }
}

/// Random corpus of up to `max_docs` documents over the shared vocabulary.
pub fn random_corpus(rng: &mut ChaCha8Rng, max_docs: usize) -> Vec<DocRecord> {
    let n = rng.random_range(1..=max_docs);
    (0..n)
        .map(|i| {
            let title_len = rng.random_range(2..8);
            let abstract_len = rng.random_range(0..12);
            let words = |rng: &mut ChaCha8Rng, len: usize| {
                (0..len)
                    .map(|_| VOCAB[rng.random_range(0..VOCAB.len())])
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            DocRecord {
                doc_id: format!("d{i}"),
                title: words(rng, title_len),
                abstract_text: words(rng, abstract_len),
                year: rng.random_range(2008..=2020),
            }
        })
        .collect()
}

/// Random per-study term sets within the documented bounds (N ≤ 5 studies,
/// M ≤ 10 terms per list).
pub fn random_leads_sets(rng: &mut ChaCha8Rng) -> LeadsTermSets {
    let n = rng.random_range(1..=5);
    let studies = (0..n)
        .map(|_| {
            let terms = |rng: &mut ChaCha8Rng| {
                let m = rng.random_range(1..=10);
                (0..m).map(|_| random_phrase(rng)).collect::<Vec<_>>()
            };
            LeadsStudy {
                population_terms: terms(rng),
                intervention_terms: terms(rng),
            }
        })
        .collect();
    LeadsTermSets::new(studies).expect("generated sets respect the bounds")
}

// ---------------------------------------------------------------- provider

/// Scripted provider keyed by marker substrings: the first entry whose
/// markers all appear in the user prompt answers the request. Queued
/// replies per entry are consumed FIFO.
pub struct KeyedProvider {
    entries: Mutex<Vec<(Vec<String>, VecDeque<String>)>>,
}

impl KeyedProvider {
    pub fn new(entries: Vec<(Vec<&str>, Vec<String>)>) -> Arc<Self> {
        Arc::new(KeyedProvider {
            entries: Mutex::new(
                entries
                    .into_iter()
                    .map(|(markers, replies)| {
                        (
                            markers.into_iter().map(str::to_string).collect(),
                            replies.into_iter().collect(),
                        )
                    })
                    .collect(),
            ),
        })
    }
}

impl ChatProvider for KeyedProvider {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, GatewayError> {
        let mut entries = self.entries.lock().unwrap();
        for (markers, replies) in entries.iter_mut() {
            if markers.iter().all(|m| request.user.contains(m.as_str())) {
                return replies.pop_front().ok_or_else(|| {
                    GatewayError::Transport(format!("no replies left for markers {markers:?}"))
                });
            }
        }
        Err(GatewayError::Transport(format!(
            "no scripted reply matches user prompt: {}",
            request.user
        )))
    }
}
