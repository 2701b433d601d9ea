//! Run the recall benchmark end to end on the bundled synthetic dataset:
//! five fixture reviews scored against the 200-document corpus, entirely
//! offline and deterministic.
//!
//! ```bash
//! cargo run -p strategist --example offline_benchmark
//! ```

use std::path::Path;

use strategist::evaluation::{load_manifest, run_benchmark, BenchOptions, Engine};
use strategist::llm::{FixtureStore, Gateway};
use strategist::pipeline::{Pipeline, PipelineOptions, PromptLibrary};
use strategist::retrieval::{load_corpus, CorpusIndex};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let testdata = Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata");
    let reviews = load_manifest(&testdata.join("reviews.jsonl"))?;
    let docs = load_corpus(&testdata.join("corpus.jsonl"))?;
    let index = CorpusIndex::build(&docs)?;

    let pipeline = Pipeline::new(
        Gateway::replay(
            FixtureStore::new(testdata.join("fixtures/llm")),
            "gpt-4o-mini",
        ),
        PromptLibrary::builtin(),
        PipelineOptions::default(),
    );

    let report = run_benchmark(
        &reviews,
        &Engine::Offline(&index),
        &pipeline,
        &BenchOptions {
            jobs: 2,
            ..BenchOptions::default()
        },
    );

    println!("per-review recall:");
    for result in &report.results {
        println!(
            "  {:<18} recall {:>7}   retrieved {:>3}   status {:?}",
            result.review_id,
            result
                .recall
                .map(|r| format!("{r:.4}"))
                .unwrap_or_else(|| "--".into()),
            result.retrieved.len(),
            result.status,
        );
    }
    println!();
    print!("{}", report.summary_table());

    println!("\nrecall distribution (10 equal bins over [0,1]):");
    for (i, count) in report.histogram.iter().enumerate() {
        let low = i as f64 / 10.0;
        let high = low + 0.1;
        println!("  ({low:.1}, {high:.1}]  {}", "#".repeat(*count as usize));
    }
    Ok(())
}
