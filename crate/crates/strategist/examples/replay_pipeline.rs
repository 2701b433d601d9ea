//! Run the full chained pipeline in replay mode over one of the bundled
//! fixture reviews, printing every stage's output: objective, PICO
//! elements, concepts, keyword sets, and the assembled query.
//!
//! No network or API key is needed — every exchange is served from the
//! committed fixture store.
//!
//! ```bash
//! cargo run -p strategist --example replay_pipeline
//! ```

use std::path::Path;

use strategist::llm::{FixtureStore, Gateway};
use strategist::pipeline::{ChainEntry, ChainInput, Pipeline, PipelineOptions, PromptLibrary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata/fixtures/llm");
    let pipeline = Pipeline::new(
        Gateway::replay(FixtureStore::new(fixtures), "gpt-4o-mini"),
        PromptLibrary::builtin(),
        PipelineOptions::default(),
    );

    let artifact = pipeline.run_chain(&ChainInput {
        title: "Vitamin D supplementation for preventing fractures in postmenopausal women: \
                a systematic review and meta-analysis"
            .into(),
        abstract_text: "We reviewed randomised controlled trials of vitamin D supplementation, \
                        alone or combined with calcium, reporting incident fractures among \
                        postmenopausal women."
            .into(),
        entry: ChainEntry::Full,
    })?;

    println!("objective:  {}\n", artifact.objective.text());
    println!("population:   {}", artifact.pico.population.join("; "));
    println!("intervention: {}", artifact.pico.intervention.join("; "));
    println!("comparison:   {}", artifact.pico.comparison.join("; "));
    println!("outcome:      {}\n", artifact.pico.outcome.join("; "));

    for concept in &artifact.concepts {
        let marker = if concept.include_in_query {
            "included"
        } else {
            "excluded"
        };
        println!(
            "concept [{marker}] {} ({})",
            concept.label, concept.source_role
        );
    }
    println!();
    for set in &artifact.keywords {
        println!(
            "keywords for {:?}: {}",
            set.concept_label,
            set.keywords.join(", ")
        );
    }
    println!("\nquery: {}\n", artifact.serialized_query);

    println!("provenance (stage -> fixture digest):");
    for (stage, digest) in &artifact.provenance {
        println!("  {stage}: {digest}");
    }
    Ok(())
}
