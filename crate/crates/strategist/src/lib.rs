//! Boolean search-strategy synthesis and recall benchmarking for
//! systematic reviews.
//!
//! The crate turns a review objective into a PubMed Boolean query through a
//! chain of structured LLM exchanges, executes queries either offline
//! (deterministic inverted index) or against PubMed E-utilities, and scores
//! generated strategies by recall against each review's included studies.
//!
//! Module map:
//! - [`query`] — Boolean AST, PubMed serializer/parser, normalization, and
//!   the per-study term-set synthesis baseline;
//! - [`retrieval`] — offline index + evaluator and the ESearch client;
//! - [`llm`] — chat gateway with schema validation and record/replay
//!   fixtures;
//! - [`pipeline`] — the chained stages from objective to strategy artifact;
//! - [`evaluation`] — dataset filtering, recall benchmark, error buckets;
//! - [`config`] — run configuration (flags > env > `strategist.toml`).
//!
//! Start with the runnable examples (`cargo run -p strategist --example
//! build_query`, `--example offline_benchmark`, ...); the thin `strategist`
//! binary wraps the same library calls.

pub mod config;
pub mod evaluation;
pub mod llm;
pub mod pipeline;
pub mod query;
pub mod retrieval;
