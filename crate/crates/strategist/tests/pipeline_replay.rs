//! Replay determinism over the committed fixture reviews: golden queries,
//! byte-identical artifacts, and the PICO-start entry point.

mod common;

use std::collections::BTreeSet;

use strategist::evaluation::load_manifest;
use strategist::llm::{FixtureStore, Gateway, GatewayError, PromptExchange, SchemaName};
use strategist::pipeline::{
    ChainEntry, ChainInput, Objective, Pipeline, PipelineError, PipelineOptions, PromptLibrary,
    EXTERNAL_PICO,
};
use strategist::retrieval::{eval_query, load_corpus, CorpusIndex};

fn replay_pipeline() -> Pipeline {
    Pipeline::new(
        Gateway::replay(FixtureStore::new(common::fixtures_dir()), "gpt-4o-mini"),
        PromptLibrary::builtin(),
        PipelineOptions::default(),
    )
}

fn golden_query(name: &str) -> String {
    std::fs::read_to_string(common::golden_dir().join(format!("{name}.query.txt")))
        .unwrap_or_else(|e| panic!("golden {name}: {e}"))
        .trim_end()
        .to_string()
}

#[test]
fn full_replay_matches_golden_queries() {
    let pipeline = replay_pipeline();
    let reviews = load_manifest(&common::manifest_path()).unwrap();
    assert!(
        reviews.len() >= 3,
        "need at least three committed fixture reviews"
    );
    for review in &reviews {
        let artifact = pipeline
            .run_chain(&ChainInput {
                title: review.title.clone(),
                abstract_text: review.abstract_text.clone(),
                entry: ChainEntry::Full,
            })
            .unwrap_or_else(|e| panic!("{}: {e}", review.review_id));
        assert_eq!(
            artifact.serialized_query,
            golden_query(&review.review_id),
            "{} diverged from its golden query",
            review.review_id
        );
        artifact.validate().unwrap();
    }
}

#[test]
fn replay_artifacts_are_byte_identical_across_runs() {
    let pipeline = replay_pipeline();
    let reviews = load_manifest(&common::manifest_path()).unwrap();
    for review in &reviews {
        let input = ChainInput {
            title: review.title.clone(),
            abstract_text: review.abstract_text.clone(),
            entry: ChainEntry::Full,
        };
        let first = pipeline.run_chain(&input).unwrap();
        let second = pipeline.run_chain(&input).unwrap();
        assert_eq!(
            first.to_json_bytes(),
            second.to_json_bytes(),
            "{}",
            review.review_id
        );
    }
}

#[test]
fn pico_start_differs_from_full_only_in_early_provenance() {
    let pipeline = replay_pipeline();
    let reviews = load_manifest(&common::manifest_path()).unwrap();
    for review in &reviews {
        let pico = review
            .external_pico
            .clone()
            .expect("manifest carries external PICO");
        let full = pipeline
            .run_chain(&ChainInput {
                title: review.title.clone(),
                abstract_text: review.abstract_text.clone(),
                entry: ChainEntry::Full,
            })
            .unwrap();
        let pico_start = pipeline
            .run_chain(&ChainInput {
                title: review.title.clone(),
                abstract_text: review.abstract_text.clone(),
                entry: ChainEntry::PicoStart(pico),
            })
            .unwrap();

        assert_eq!(pico_start.provenance["objective"], EXTERNAL_PICO);
        assert_eq!(pico_start.provenance["pico"], EXTERNAL_PICO);
        assert_eq!(pico_start.query, full.query, "{}", review.review_id);
        assert_eq!(pico_start.serialized_query, full.serialized_query);
        assert_eq!(pico_start.concepts, full.concepts);
        assert_eq!(pico_start.keywords, full.keywords);
        // provenance agrees everywhere downstream of the entry point
        for (stage, digest) in &full.provenance {
            if stage == "objective" || stage == "pico" {
                assert_ne!(pico_start.provenance[stage], *digest);
            } else {
                assert_eq!(pico_start.provenance[stage], *digest, "{stage}");
            }
        }
    }
}

#[test]
fn corrected_objective_chain_recovers_full_recall() {
    let pipeline = replay_pipeline();
    let reviews = load_manifest(&common::manifest_path()).unwrap();
    let review = reviews
        .iter()
        .find(|r| r.review_id == "cbt-insomnia")
        .unwrap();

    let corrected: std::collections::BTreeMap<String, String> = serde_json::from_str(
        &std::fs::read_to_string(common::corrected_objectives_path()).unwrap(),
    )
    .unwrap();
    let objective = Objective::new(corrected["cbt-insomnia"].clone()).unwrap();

    let artifact = pipeline
        .run_chain(&ChainInput {
            title: review.title.clone(),
            abstract_text: review.abstract_text.clone(),
            entry: ChainEntry::ObjectiveStart(objective),
        })
        .unwrap();
    assert_eq!(
        artifact.serialized_query,
        golden_query("cbt-insomnia.corrected")
    );

    let docs = load_corpus(&common::corpus_path()).unwrap();
    let index = CorpusIndex::build(&docs).unwrap();
    let retrieved = eval_query(&artifact.query, &index);
    let hits: BTreeSet<&String> = review.included_pmids.intersection(&retrieved).collect();
    assert_eq!(
        hits.len(),
        review.included_pmids.len(),
        "corrected objective reaches recall 1.0"
    );
}

#[test]
fn unrecorded_exchange_is_a_missing_fixture() {
    let gateway = Gateway::replay(FixtureStore::new(common::fixtures_dir()), "gpt-4o-mini");
    let exchange = PromptExchange::new(
        "never recorded",
        "nothing stored for this prompt",
        SchemaName::Objective,
    )
    .unwrap();
    let expected = gateway.digest_of(&exchange);
    match gateway.complete_structured(&exchange) {
        Err(GatewayError::MissingFixture { digest }) => assert_eq!(digest, expected),
        other => panic!("expected MissingFixture, got {other:?}"),
    }
}

#[test]
fn chain_failure_on_missing_fixture_names_the_stage() {
    let pipeline = replay_pipeline();
    let err = pipeline
        .run_chain(&ChainInput {
            title: "A title nobody recorded fixtures for".into(),
            abstract_text: String::new(),
            entry: ChainEntry::Full,
        })
        .unwrap_err();
    assert_eq!(err.error.stage, "objective");
    assert!(matches!(
        err.error.source,
        PipelineError::Gateway(GatewayError::MissingFixture { .. })
    ));
}
