//! Recall benchmark over a manifest of systematic reviews: dataset
//! filtering, per-review strategy generation and execution, aggregate
//! reporting, and error-bucket classification for low-recall strategies.

mod report;

pub use report::write_report;

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::{
    save_artifact, save_failure, ChainEntry, ChainInput, PicoElements, Pipeline, StrategyArtifact,
};
use crate::query::serialize_pubmed;
use crate::retrieval::{
    eval_query, CorpusIndex, DocRecord, PubMedClient, SearchLimits, SearchOutcome, MAX_RETMAX,
};

/// Publication-year window for benchmark inclusion.
pub const YEAR_MIN: i32 = 2012;
pub const YEAR_MAX: i32 = 2016;
/// Reviews whose strategies return more than this many citations are
/// excluded (one-API-call retrieval cap).
pub const MAX_CITATIONS: u64 = 1000;
/// Strategies at or below this recall are dropped from the filtered mean.
pub const FILTERED_MEAN_THRESHOLD: f64 = 0.2;
/// Reviews below this recall enter error-bucket analysis.
pub const LOW_RECALL_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid input: included set is empty")]
    EmptyIncluded,
    #[error("manifest line {line}: {message}")]
    ManifestParse { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One benchmark review: what the chain gets as input and the ground-truth
/// included studies the generated strategy must retrieve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub review_id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub included_pmids: BTreeSet<String>,
    pub pub_year: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_pico: Option<PicoElements>,
}

impl ReviewRecord {
    pub fn validate(&self) -> Result<(), String> {
        if self.review_id.trim().is_empty() {
            return Err("review_id is empty".into());
        }
        if self.included_pmids.is_empty() {
            return Err("included_pmids is empty".into());
        }
        if !(1900..=2100).contains(&self.pub_year) {
            return Err(format!("pub_year {} outside 1900–2100", self.pub_year));
        }
        Ok(())
    }
}

/// Read a JSON-lines manifest (one [`ReviewRecord`] per line). Parse and
/// validation errors carry the 1-based line number.
pub fn load_manifest(path: &Path) -> Result<Vec<ReviewRecord>, EvalError> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ReviewRecord =
            serde_json::from_str(&line).map_err(|e| EvalError::ManifestParse {
                line: i + 1,
                message: e.to_string(),
            })?;
        record
            .validate()
            .map_err(|message| EvalError::ManifestParse {
                line: i + 1,
                message,
            })?;
        if records
            .iter()
            .any(|r: &ReviewRecord| r.review_id == record.review_id)
        {
            return Err(EvalError::ManifestParse {
                line: i + 1,
                message: format!("duplicate review_id `{}`", record.review_id),
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Fraction of the included studies that were retrieved.
pub fn compute_recall(
    retrieved: &BTreeSet<String>,
    included: &BTreeSet<String>,
) -> Result<f64, EvalError> {
    if included.is_empty() {
        return Err(EvalError::EmptyIncluded);
    }
    let hits = included.intersection(retrieved).count();
    Ok(hits as f64 / included.len() as f64)
}

/// Why a review was excluded from the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExclusionReason {
    #[serde(rename = "year-window")]
    YearWindow,
    #[serde(rename = "over-1000")]
    OverLimit,
    #[serde(rename = "api-error")]
    ApiError,
}

impl ExclusionReason {
    pub fn id(self) -> &'static str {
        match self {
            ExclusionReason::YearWindow => "year-window",
            ExclusionReason::OverLimit => "over-1000",
            ExclusionReason::ApiError => "api-error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub review_id: String,
    pub reason: ExclusionReason,
}

/// What probing a review's strategy reported: a citation count, or an API
/// failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeOutcome {
    Count(u64),
    ApiError,
}

/// Apply the benchmark inclusion rules: publication year within
/// 2012–2016, probed citation count at most 1000, and no API error during
/// retrieval. The year rule is checked first so out-of-window records are
/// never probed. Exclusions are data, not failures.
pub fn filter_reviews(
    records: Vec<ReviewRecord>,
    probe: &mut dyn FnMut(&ReviewRecord) -> ProbeOutcome,
) -> (Vec<ReviewRecord>, Vec<Exclusion>) {
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for record in records {
        if !(YEAR_MIN..=YEAR_MAX).contains(&record.pub_year) {
            excluded.push(Exclusion {
                review_id: record.review_id.clone(),
                reason: ExclusionReason::YearWindow,
            });
            continue;
        }
        match probe(&record) {
            ProbeOutcome::ApiError => excluded.push(Exclusion {
                review_id: record.review_id.clone(),
                reason: ExclusionReason::ApiError,
            }),
            ProbeOutcome::Count(n) if n > MAX_CITATIONS => excluded.push(Exclusion {
                review_id: record.review_id.clone(),
                reason: ExclusionReason::OverLimit,
            }),
            ProbeOutcome::Count(_) => kept.push(record),
        }
    }
    (kept, excluded)
}

/// Per-review outcome status. `api_error` marks any per-review failure —
/// an LLM stage failure, a retrieval error, or missing external PICO —
/// none of which abort the run; such reviews are excluded from the means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Truncated,
    ApiError,
    Excluded,
}

impl Status {
    /// Statuses that contribute recall to the aggregate numbers.
    pub fn is_scored(self) -> bool {
        matches!(self, Status::Ok | Status::Truncated)
    }
}

/// One review's evaluation outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub review_id: String,
    pub retrieved: BTreeSet<String>,
    /// Defined exactly when the status is scored (`ok` / `truncated`).
    pub recall: Option<f64>,
    pub total_count: u64,
    pub status: Status,
}

/// A per-review failure note kept alongside the results.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureNote {
    pub review_id: String,
    pub stage: String,
    pub message: String,
}

/// Aggregate benchmark output: per-review results in manifest order plus
/// the two reporting conventions (unfiltered mean, and mean over recalls
/// strictly above 0.2), the perfect/zero counts, and a 10-bin recall
/// histogram (equal-width, right-closed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    /// "model entry" label for the summary table.
    pub label: String,
    pub engine: String,
    pub entry: String,
    pub results: Vec<EvalResult>,
    pub n_evaluated: usize,
    pub mean_recall: f64,
    pub mean_recall_above_0_2: Option<f64>,
    pub n_perfect: usize,
    pub n_zero: usize,
    pub histogram: [u64; 10],
    pub exclusions: Vec<Exclusion>,
    pub exclusion_counts: BTreeMap<String, usize>,
    pub failures: Vec<FailureNote>,
}

impl BenchmarkReport {
    /// Fold per-review results into the aggregate fields.
    pub fn aggregate(
        label: String,
        engine: String,
        entry: String,
        results: Vec<EvalResult>,
        exclusions: Vec<Exclusion>,
        failures: Vec<FailureNote>,
    ) -> Self {
        let scored: Vec<f64> = results
            .iter()
            .filter(|r| r.status.is_scored())
            .filter_map(|r| r.recall)
            .collect();
        let mean_recall = mean(&scored).unwrap_or(0.0);
        let above: Vec<f64> = scored
            .iter()
            .copied()
            .filter(|&r| r > FILTERED_MEAN_THRESHOLD)
            .collect();
        let mean_recall_above_0_2 = mean(&above);
        let n_perfect = scored.iter().filter(|&&r| r == 1.0).count();
        let n_zero = scored.iter().filter(|&&r| r == 0.0).count();
        let mut histogram = [0u64; 10];
        for &r in &scored {
            histogram[histogram_bin(r)] += 1;
        }
        let mut exclusion_counts: BTreeMap<String, usize> = BTreeMap::new();
        for e in &exclusions {
            *exclusion_counts
                .entry(e.reason.id().to_string())
                .or_default() += 1;
        }
        BenchmarkReport {
            label,
            engine,
            entry,
            n_evaluated: scored.len(),
            mean_recall,
            mean_recall_above_0_2,
            n_perfect,
            n_zero,
            histogram,
            results,
            exclusions,
            exclusion_counts,
            failures,
        }
    }

    /// Canonical JSON bytes of the report (pretty, trailing newline).
    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("report serializes");
        bytes.push(b'\n');
        bytes
    }

    /// Plain-text summary table: model/entry, mean recall, filtered mean.
    pub fn summary_table(&self) -> String {
        let filtered = self
            .mean_recall_above_0_2
            .map(|m| format!("{m:.4}"))
            .unwrap_or_else(|| "--".to_string());
        let mut out = String::new();
        out.push_str(&format!(
            "{:<40} {:>12} {:>20}\n",
            "Model / Entry", "Mean recall", "Mean recall (>0.2)"
        ));
        out.push_str(&format!(
            "{:<40} {:>12.4} {:>20}\n",
            self.label, self.mean_recall, filtered
        ));
        out.push_str(&format!(
            "\nevaluated: {}   perfect recall: {}   zero recall: {}\n",
            self.n_evaluated, self.n_perfect, self.n_zero
        ));
        if !self.exclusion_counts.is_empty() {
            out.push_str("excluded:");
            for (reason, count) in &self.exclusion_counts {
                out.push_str(&format!(" {reason}={count}"));
            }
            out.push('\n');
        }
        out
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Right-closed equal-width bins over [0, 1]: the first bin keeps 0,
/// every other bin is `(k/10, (k+1)/10]`.
fn histogram_bin(recall: f64) -> usize {
    if recall <= 0.0 {
        0
    } else {
        (((recall * 10.0).ceil() as usize) - 1).min(9)
    }
}

/// Which retrieval engine executes the generated strategies.
pub enum Engine<'a> {
    Offline(&'a CorpusIndex),
    PubMed(&'a PubMedClient),
}

impl Engine<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Offline(_) => "offline",
            Engine::PubMed(_) => "pubmed",
        }
    }

    /// Execute a strategy. The offline engine evaluates the query tree
    /// exactly; the PubMed engine sends the serialized form to ESearch.
    /// `date_ceiling` (publication year) keeps post-review articles out.
    fn execute(
        &self,
        artifact: &StrategyArtifact,
        date_ceiling: Option<i32>,
    ) -> Result<SearchOutcome, String> {
        match self {
            Engine::Offline(index) => {
                let ids: Vec<String> = eval_query(&artifact.query, index)
                    .into_iter()
                    .filter(|id| match (date_ceiling, index.year_of(id)) {
                        (Some(ceiling), Some(year)) => year <= ceiling,
                        _ => true,
                    })
                    .collect();
                let total = ids.len() as u64;
                Ok(SearchOutcome::new(ids, total))
            }
            Engine::PubMed(client) => client
                .esearch(
                    &serialize_pubmed(&artifact.query),
                    &SearchLimits {
                        retmax: MAX_RETMAX,
                        date_floor: None,
                        date_ceiling,
                    },
                )
                .map_err(|e| e.to_string()),
        }
    }
}

/// Chain entry point for benchmark runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchEntry {
    /// Reformulate an objective from title+abstract, then run every stage.
    Full,
    /// Start from each review's externally supplied PICO elements.
    PicoStart,
}

impl BenchEntry {
    pub fn name(self) -> &'static str {
        match self {
            BenchEntry::Full => "full",
            BenchEntry::PicoStart => "pico_start",
        }
    }
}

/// Benchmark run options.
pub struct BenchOptions {
    pub entry: BenchEntry,
    /// Apply the year/citation-count/API-error inclusion rules before
    /// scoring.
    pub apply_filter: bool,
    /// Pass each review's publication year as the retrieval date ceiling.
    pub date_ceiling: bool,
    /// Worker threads for per-review evaluation.
    pub jobs: usize,
    /// Persist per-review strategy artifacts (and failures) here.
    pub artifacts_dir: Option<PathBuf>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            entry: BenchEntry::Full,
            apply_filter: false,
            date_ceiling: true,
            jobs: 1,
            artifacts_dir: None,
        }
    }
}

struct ReviewEvaluation {
    outcome: Result<SearchOutcome, FailureNote>,
}

/// Run the benchmark: for each review build a strategy at the chosen entry
/// point, execute it on the engine, and score recall; aggregate both
/// reporting conventions. Per-review failures become `api_error` results
/// instead of aborting the run.
pub fn run_benchmark(
    records: &[ReviewRecord],
    engine: &Engine<'_>,
    pipeline: &Pipeline,
    options: &BenchOptions,
) -> BenchmarkReport {
    // year rule first: out-of-window records are never probed
    let (to_evaluate, mut exclusions): (Vec<&ReviewRecord>, Vec<Exclusion>) =
        if options.apply_filter {
            let mut keep = Vec::new();
            let mut out = Vec::new();
            for record in records {
                if (YEAR_MIN..=YEAR_MAX).contains(&record.pub_year) {
                    keep.push(record);
                } else {
                    out.push(Exclusion {
                        review_id: record.review_id.clone(),
                        reason: ExclusionReason::YearWindow,
                    });
                }
            }
            (keep, out)
        } else {
            (records.iter().collect(), Vec::new())
        };

    let evaluations = evaluate_concurrently(&to_evaluate, engine, pipeline, options);

    let mut results = Vec::with_capacity(records.len());
    let mut failures = Vec::new();
    let mut by_id: BTreeMap<&str, ReviewEvaluation> = to_evaluate
        .iter()
        .map(|r| r.review_id.as_str())
        .zip(evaluations)
        .collect();

    for record in records {
        let Some(evaluation) = by_id.remove(record.review_id.as_str()) else {
            // year-window exclusion
            results.push(excluded_result(record));
            continue;
        };
        match evaluation.outcome {
            Ok(outcome) => {
                if options.apply_filter && outcome.total_count > MAX_CITATIONS {
                    exclusions.push(Exclusion {
                        review_id: record.review_id.clone(),
                        reason: ExclusionReason::OverLimit,
                    });
                    results.push(excluded_result(record));
                    continue;
                }
                let retrieved: BTreeSet<String> = outcome.ids.iter().cloned().collect();
                let recall = compute_recall(&retrieved, &record.included_pmids)
                    .expect("manifest validation guarantees non-empty included set");
                results.push(EvalResult {
                    review_id: record.review_id.clone(),
                    retrieved,
                    recall: Some(recall),
                    total_count: outcome.total_count,
                    status: if outcome.truncated {
                        Status::Truncated
                    } else {
                        Status::Ok
                    },
                });
            }
            Err(note) => {
                if options.apply_filter {
                    exclusions.push(Exclusion {
                        review_id: record.review_id.clone(),
                        reason: ExclusionReason::ApiError,
                    });
                    results.push(excluded_result(record));
                } else {
                    results.push(EvalResult {
                        review_id: record.review_id.clone(),
                        retrieved: BTreeSet::new(),
                        recall: None,
                        total_count: 0,
                        status: Status::ApiError,
                    });
                }
                failures.push(note);
            }
        }
    }

    BenchmarkReport::aggregate(
        format!("{} {}", pipeline.gateway().model(), options.entry.name()),
        engine.name().to_string(),
        options.entry.name().to_string(),
        results,
        exclusions,
        failures,
    )
}

fn excluded_result(record: &ReviewRecord) -> EvalResult {
    EvalResult {
        review_id: record.review_id.clone(),
        retrieved: BTreeSet::new(),
        recall: None,
        total_count: 0,
        status: Status::Excluded,
    }
}

/// Evaluate reviews on a small worker pool, preserving input order.
fn evaluate_concurrently(
    records: &[&ReviewRecord],
    engine: &Engine<'_>,
    pipeline: &Pipeline,
    options: &BenchOptions,
) -> Vec<ReviewEvaluation> {
    let jobs = options.jobs.max(1).min(records.len().max(1));
    let next: Mutex<usize> = Mutex::new(0);
    let slots: Vec<Mutex<Option<ReviewEvaluation>>> =
        records.iter().map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let index = {
                    let mut guard = next.lock().expect("queue poisoned");
                    let index = *guard;
                    *guard += 1;
                    index
                };
                if index >= records.len() {
                    break;
                }
                let evaluation = evaluate_one(records[index], engine, pipeline, options);
                *slots[index].lock().expect("slot poisoned") = Some(evaluation);
            });
        }
    });

    slots
        .into_iter()
        .map(|slot| {
            slot.into_inner()
                .expect("slot poisoned")
                .expect("worker filled slot")
        })
        .collect()
}

fn evaluate_one(
    record: &ReviewRecord,
    engine: &Engine<'_>,
    pipeline: &Pipeline,
    options: &BenchOptions,
) -> ReviewEvaluation {
    let entry = match options.entry {
        BenchEntry::Full => ChainEntry::Full,
        BenchEntry::PicoStart => match &record.external_pico {
            Some(pico) => ChainEntry::PicoStart(pico.clone()),
            None => {
                return ReviewEvaluation {
                    outcome: Err(FailureNote {
                        review_id: record.review_id.clone(),
                        stage: "input".into(),
                        message: "pico_start entry requires external_pico".into(),
                    }),
                }
            }
        },
    };
    let input = ChainInput {
        title: record.title.clone(),
        abstract_text: record.abstract_text.clone(),
        entry,
    };
    let artifact = match pipeline.run_chain(&input) {
        Ok(artifact) => artifact,
        Err(err) => {
            if let Some(dir) = &options.artifacts_dir {
                let _ = save_failure(dir, &record.review_id, &err);
            }
            return ReviewEvaluation {
                outcome: Err(FailureNote {
                    review_id: record.review_id.clone(),
                    stage: err.error.stage.to_string(),
                    message: err.error.to_string(),
                }),
            };
        }
    };
    if let Some(dir) = &options.artifacts_dir {
        let _ = save_artifact(dir, &record.review_id, &artifact);
    }
    let ceiling = options.date_ceiling.then_some(record.pub_year);
    let outcome = engine
        .execute(&artifact, ceiling)
        .map_err(|message| FailureNote {
            review_id: record.review_id.clone(),
            stage: "retrieval".into(),
            message,
        });
    ReviewEvaluation { outcome }
}

/// Collects the artifacts a benchmark produced, keyed by review id. Used by
/// callers that want error-bucket analysis after a run.
pub fn collect_artifacts(
    records: &[ReviewRecord],
    artifacts_dir: &Path,
) -> BTreeMap<String, StrategyArtifact> {
    let mut out = BTreeMap::new();
    for record in records {
        let path = artifacts_dir.join(format!("{}.json", record.review_id));
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(artifact) = serde_json::from_str::<StrategyArtifact>(&text) {
                out.insert(record.review_id.clone(), artifact);
            }
        }
    }
    out
}

/// Heuristic signals attached to one low-recall review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketFlags {
    pub review_id: String,
    pub recall: f64,
    /// No query keyword appears in any included-article title.
    pub terminology_mismatch: bool,
    /// Included-study anomalies: fewer than two included ids, or ids
    /// missing from the searched corpus entirely.
    pub dataset_quality: bool,
    /// A corrected-objective re-run recovered recall 1.0.
    pub objective_error: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corrected_recall: Option<f64>,
}

/// Error-bucket classification over all scored reviews below 0.5 recall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorAnalysis {
    pub flagged: Vec<BucketFlags>,
}

/// Classify low-recall reviews with three heuristic signals: terminology
/// mismatch (query keywords vs included titles), dataset-quality anomalies,
/// and objective-formulation errors confirmed by a corrected-objective
/// re-run reaching recall 1.0. `rerun_with_corrected` returns the re-run
/// recall when a corrected objective exists for the review.
pub fn error_buckets(
    results: &[EvalResult],
    artifacts: &BTreeMap<String, StrategyArtifact>,
    records: &[ReviewRecord],
    docs: &[DocRecord],
    mut rerun_with_corrected: impl FnMut(&ReviewRecord) -> Option<f64>,
) -> ErrorAnalysis {
    let titles: BTreeMap<&str, &str> = docs
        .iter()
        .map(|d| (d.doc_id.as_str(), d.title.as_str()))
        .collect();
    let mut flagged = Vec::new();
    for result in results {
        let Some(recall) = result.recall else {
            continue;
        };
        if !result.status.is_scored() || recall >= LOW_RECALL_THRESHOLD {
            continue;
        }
        let Some(record) = records.iter().find(|r| r.review_id == result.review_id) else {
            continue;
        };

        let terminology_mismatch = artifacts.get(&result.review_id).is_some_and(|artifact| {
            let keywords: Vec<String> = artifact
                .keywords
                .iter()
                .flat_map(|ks| ks.keywords.iter())
                .map(|k| k.to_lowercase())
                .collect();
            let included_titles: Vec<String> = record
                .included_pmids
                .iter()
                .filter_map(|id| titles.get(id.as_str()))
                .map(|t| t.to_lowercase())
                .collect();
            !included_titles.is_empty()
                && !keywords
                    .iter()
                    .any(|kw| included_titles.iter().any(|title| title.contains(kw)))
        });

        let dataset_quality = record.included_pmids.len() < 2
            || (!docs.is_empty()
                && record
                    .included_pmids
                    .iter()
                    .any(|id| !titles.contains_key(id.as_str())));

        let corrected_recall = rerun_with_corrected(record);
        let objective_error = corrected_recall == Some(1.0);

        flagged.push(BucketFlags {
            review_id: result.review_id.clone(),
            recall,
            terminology_mismatch,
            dataset_quality,
            objective_error,
            corrected_recall,
        });
    }
    ErrorAnalysis { flagged }
}
