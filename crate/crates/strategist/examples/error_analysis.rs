//! Error-bucket analysis over low-recall strategies: terminology
//! mismatches, dataset anomalies, and objective-formulation errors
//! confirmed by a corrected-objective re-run recovering full recall.
//!
//! The bundled `cbt-insomnia` review scores recall 0 because its included
//! studies never use the review's vocabulary; re-running the chain with a
//! corrected objective lifts it to 1.0.
//!
//! ```bash
//! cargo run -p strategist --example error_analysis
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use strategist::evaluation::{
    compute_recall, error_buckets, load_manifest, run_benchmark, BenchOptions, Engine,
};
use strategist::llm::{FixtureStore, Gateway};
use strategist::pipeline::{
    ChainEntry, ChainInput, Objective, Pipeline, PipelineOptions, PromptLibrary, StrategyArtifact,
};
use strategist::retrieval::{eval_query, load_corpus, CorpusIndex};

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

    // score every review, keeping the artifacts for keyword inspection
    let artifacts_dir = tempfile::tempdir()?;
    let options = BenchOptions {
        artifacts_dir: Some(artifacts_dir.path().to_path_buf()),
        ..BenchOptions::default()
    };
    let report = run_benchmark(&reviews, &Engine::Offline(&index), &pipeline, &options);
    let artifacts: BTreeMap<String, StrategyArtifact> =
        strategist::evaluation::collect_artifacts(&reviews, artifacts_dir.path());

    let corrected: BTreeMap<String, String> = serde_json::from_str(&std::fs::read_to_string(
        testdata.join("corrected_objectives.json"),
    )?)?;

    let analysis = error_buckets(&report.results, &artifacts, &reviews, &docs, |record| {
        let text = corrected.get(&record.review_id)?;
        let objective = Objective::new(text.clone()).ok()?;
        let artifact = pipeline
            .run_chain(&ChainInput {
                title: record.title.clone(),
                abstract_text: record.abstract_text.clone(),
                entry: ChainEntry::ObjectiveStart(objective),
            })
            .ok()?;
        let retrieved = eval_query(&artifact.query, &index);
        compute_recall(&retrieved, &record.included_pmids).ok()
    });

    println!("reviews flagged below 0.5 recall:\n");
    for flags in &analysis.flagged {
        println!("{} (recall {:.4})", flags.review_id, flags.recall);
        println!("  terminology mismatch: {}", flags.terminology_mismatch);
        println!("  dataset quality:      {}", flags.dataset_quality);
        match flags.corrected_recall {
            Some(recall) => println!(
                "  objective error:      {} (corrected objective re-run reached {recall:.4})",
                flags.objective_error
            ),
            None => println!("  objective error:      no corrected objective supplied"),
        }
        println!();
    }
    Ok(())
}
