use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use super::*;
use crate::llm::{ChatProvider, ChatRequest, FixtureStore, Gateway};
use crate::retrieval::{eval_query, CorpusIndex, DocRecord};

/// Provider that plays a fixed script; each step may assert a marker
/// substring so a reply cannot be consumed by the wrong stage.
struct ScriptProvider {
    steps: Mutex<VecDeque<(Option<&'static str>, String)>>,
}

impl ScriptProvider {
    fn new(steps: Vec<(Option<&'static str>, &str)>) -> Arc<Self> {
        Arc::new(ScriptProvider {
            steps: Mutex::new(steps.into_iter().map(|(m, r)| (m, r.to_string())).collect()),
        })
    }
}

impl ChatProvider for ScriptProvider {
    fn complete(&self, request: &ChatRequest<'_>) -> Result<String, GatewayError> {
        let (marker, reply) = self
            .steps
            .lock()
            .unwrap()
            .pop_front()
            .ok_or_else(|| GatewayError::Transport("script exhausted".into()))?;
        if let Some(marker) = marker {
            assert!(
                request.user.contains(marker) || request.system.contains(marker),
                "script step expected marker `{marker}` in prompt, got user: {}",
                request.user
            );
        }
        Ok(reply)
    }
}

const OBJECTIVE_REPLY: &str = r#"{"objective":"To determine whether vitamin D supplementation reduces fracture risk in postmenopausal women."}"#;
const PICO_REPLY: &str = r#"{"population":["postmenopausal women"],"intervention":["vitamin D supplementation"],"comparison":["placebo"],"outcome":["fracture incidence"]}"#;
const CONCEPTS_REPLY: &str = r#"{"concepts":[
    {"label":"postmenopausal women","source_role":"population","include_in_query":true},
    {"label":"vitamin D","source_role":"intervention","include_in_query":true},
    {"label":"fracture outcomes","source_role":"outcome","include_in_query":false}
]}"#;
const KW_POPULATION_REPLY: &str =
    r#"{"keywords":["postmenopausal women","postmenopausal","menopause"]}"#;
const KW_INTERVENTION_REPLY: &str =
    r#"{"keywords":["Vitamin D","vitamin d","cholecalciferol","colecalciferol"]}"#;

const EXPECTED_QUERY: &str = "((\"postmenopausal women\"[tiab] OR postmenopausal[tiab] OR menopause[tiab]) AND (\"Vitamin D\"[tiab] OR cholecalciferol[tiab] OR colecalciferol[tiab]))";

fn full_script() -> Arc<ScriptProvider> {
    ScriptProvider::new(vec![
        (Some("Formulate the review's objective"), OBJECTIVE_REPLY),
        (Some("Extract the PICO elements"), PICO_REPLY),
        (Some("Identify the searchable concepts"), CONCEPTS_REPLY),
        (Some("postmenopausal women"), KW_POPULATION_REPLY),
        (Some("vitamin D"), KW_INTERVENTION_REPLY),
    ])
}

fn full_input() -> ChainInput {
    ChainInput {
        title: "Vitamin D supplementation for preventing fractures in postmenopausal women".into(),
        abstract_text: "Randomized trials of vitamin D with or without calcium were reviewed."
            .into(),
        entry: ChainEntry::Full,
    }
}

fn pipeline_with(provider: Arc<dyn ChatProvider>) -> Pipeline {
    Pipeline::new(
        Gateway::live(provider, "test-model"),
        PromptLibrary::builtin(),
        PipelineOptions::default(),
    )
}

#[test]
fn full_chain_produces_validated_artifact() {
    let pipeline = pipeline_with(full_script());
    let artifact = pipeline.run_chain(&full_input()).unwrap();

    assert_eq!(artifact.serialized_query, EXPECTED_QUERY);
    artifact.validate().unwrap();

    assert_eq!(artifact.concepts.len(), 3);
    let included: Vec<_> = artifact
        .concepts
        .iter()
        .filter(|c| c.include_in_query)
        .collect();
    assert_eq!(included.len(), 2);
    // outcome-derived concept is present but excluded by default
    assert!(artifact
        .concepts
        .iter()
        .any(|c| c.source_role == SourceRole::Outcome && !c.include_in_query));

    // case-insensitive dedup collapsed the vitamin D spellings
    let vitd = artifact
        .keywords
        .iter()
        .find(|ks| ks.concept_label == "vitamin D")
        .unwrap();
    assert_eq!(
        vitd.keywords,
        vec!["Vitamin D", "cholecalciferol", "colecalciferol"]
    );

    for stage in ["objective", "pico", "concepts"] {
        assert!(
            artifact.provenance.contains_key(stage),
            "missing provenance for {stage}"
        );
    }
    assert!(artifact.provenance.contains_key("keywords:vitamin D"));
}

#[test]
fn artifact_serialized_query_reparses_to_normalized_tree() {
    let pipeline = pipeline_with(full_script());
    let artifact = pipeline.run_chain(&full_input()).unwrap();
    let reparsed = crate::query::parse_pubmed(&artifact.serialized_query).unwrap();
    assert_eq!(reparsed, artifact.query.clone().normalize());
}

#[test]
fn record_then_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let store = FixtureStore::new(dir.path());

    let recorder = Pipeline::new(
        Gateway::record(full_script(), store.clone(), "test-model"),
        PromptLibrary::builtin(),
        PipelineOptions::default(),
    );
    let recorded = recorder.run_chain(&full_input()).unwrap();

    let replayer = Pipeline::new(
        Gateway::replay(store.clone(), "test-model"),
        PromptLibrary::builtin(),
        PipelineOptions::default(),
    );
    let first = replayer.run_chain(&full_input()).unwrap();
    let second = replayer.run_chain(&full_input()).unwrap();

    assert_eq!(first.to_json_bytes(), second.to_json_bytes());
    assert_eq!(first.to_json_bytes(), recorded.to_json_bytes());
}

#[test]
fn pico_start_skips_early_stages_and_marks_provenance() {
    // no objective/pico replies scripted: entering at step 2 must not ask
    let provider = ScriptProvider::new(vec![
        (Some("searchable concepts"), CONCEPTS_REPLY),
        (None, KW_POPULATION_REPLY),
        (None, KW_INTERVENTION_REPLY),
    ]);
    let pipeline = pipeline_with(provider);
    let pico = PicoElements::new(
        vec!["postmenopausal women".into()],
        vec!["vitamin D supplementation".into()],
        vec![],
        vec!["fracture incidence".into()],
    )
    .unwrap();
    let input = ChainInput {
        title: "Vitamin D and fractures".into(),
        abstract_text: String::new(),
        entry: ChainEntry::PicoStart(pico),
    };
    let artifact = pipeline.run_chain(&input).unwrap();
    assert_eq!(artifact.provenance["objective"], EXTERNAL_PICO);
    assert_eq!(artifact.provenance["pico"], EXTERNAL_PICO);
    assert_eq!(artifact.serialized_query, EXPECTED_QUERY);
}

#[test]
fn objective_start_skips_reformulation() {
    let provider = ScriptProvider::new(vec![
        (Some("Extract the PICO elements"), PICO_REPLY),
        (None, CONCEPTS_REPLY),
        (None, KW_POPULATION_REPLY),
        (None, KW_INTERVENTION_REPLY),
    ]);
    let pipeline = pipeline_with(provider);
    let objective = Objective::new("Does vitamin D reduce fracture risk?").unwrap();
    let input = ChainInput {
        title: String::new(),
        abstract_text: String::new(),
        entry: ChainEntry::ObjectiveStart(objective),
    };
    let artifact = pipeline.run_chain(&input).unwrap();
    assert_eq!(artifact.provenance["objective"], EXTERNAL_OBJECTIVE);
    assert_eq!(artifact.provenance["pico"].len(), 64); // recorded digest
}

#[test]
fn empty_intervention_reply_triggers_one_repair() {
    let provider = ScriptProvider::new(vec![
        (None, r#"{"population":["adults"],"intervention":[]}"#),
        (Some("previous reply was rejected"), PICO_REPLY),
    ]);
    let pipeline = pipeline_with(provider);
    let objective = Objective::new("test objective").unwrap();
    let (pico, _) = pipeline.extract_pico(&objective).unwrap();
    assert_eq!(pico.intervention, vec!["vitamin D supplementation"]);
}

#[test]
fn stage_failure_reports_stage_and_partial_progress() {
    let provider = ScriptProvider::new(vec![
        (None, OBJECTIVE_REPLY),
        (None, PICO_REPLY),
        (None, "not json"),
        (None, "still not json"),
        (None, "never json"),
    ]);
    let pipeline = pipeline_with(provider);
    let err = pipeline.run_chain(&full_input()).unwrap_err();
    assert_eq!(err.error.stage, "concepts");
    assert!(err.partial.objective.is_some());
    assert!(err.partial.pico.is_some());
    assert!(err.partial.concepts.is_none());
}

#[test]
fn empty_title_fails_reformulation() {
    let pipeline = pipeline_with(ScriptProvider::new(vec![]));
    let err = pipeline
        .reformulate_objective("  ", "abstract")
        .unwrap_err();
    assert_eq!(err.stage, "objective");
}

#[test]
fn concept_with_absent_role_is_dropped() {
    let provider = ScriptProvider::new(vec![(
        None,
        r#"{"concepts":[
            {"label":"adults","source_role":"population"},
            {"label":"metformin","source_role":"intervention"},
            {"label":"placebo","source_role":"comparison"}
        ]}"#,
    )]);
    let pipeline = pipeline_with(provider);
    // comparison is empty in the input, so the placebo concept must go
    let pico = PicoElements::new(
        vec!["adults".into()],
        vec!["metformin".into()],
        vec![],
        vec![],
    )
    .unwrap();
    let (concepts, _) = pipeline.identify_concepts(&pico).unwrap();
    assert_eq!(concepts.len(), 2);
    assert!(concepts
        .iter()
        .all(|c| c.source_role != SourceRole::Comparison));
}

#[test]
fn keyword_set_enforces_dedup_cap_and_label_presence() {
    let many: Vec<String> = (0..40).map(|i| format!("synonym {i}")).collect();
    let set = KeywordSet::new("metformin", many).unwrap();
    assert_eq!(set.keywords.len(), MAX_KEYWORDS_PER_CONCEPT);
    // label was absent from the reply, so it was prepended
    assert_eq!(set.keywords[0], "metformin");

    let set = KeywordSet::new(
        "vitamin D",
        vec![
            "Vitamin D".into(),
            "vitamin d".into(),
            "cholecalciferol".into(),
        ],
    )
    .unwrap();
    assert_eq!(set.keywords, vec!["Vitamin D", "cholecalciferol"]);
}

#[test]
fn construct_with_single_included_concept_is_the_block_alone() {
    let pipeline = pipeline_with(ScriptProvider::new(vec![]));
    let objective = Objective::new("obj").unwrap();
    let pico = PicoElements::new(vec!["p".into()], vec!["i".into()], vec![], vec![]).unwrap();
    let concepts = vec![Concept {
        label: "p".into(),
        source_role: SourceRole::Population,
        include_in_query: true,
    }];
    let sets = vec![KeywordSet::new("p", vec!["p1".into(), "p2".into()]).unwrap()];
    let artifact = pipeline
        .construct_strategy(objective, pico, concepts, sets, BTreeMap::new())
        .unwrap();
    assert_eq!(artifact.serialized_query, "(p1[tiab] OR p2[tiab])");
}

#[test]
fn construct_without_included_concepts_is_invalid_input() {
    let pipeline = pipeline_with(ScriptProvider::new(vec![]));
    let objective = Objective::new("obj").unwrap();
    let pico = PicoElements::new(vec!["p".into()], vec!["i".into()], vec![], vec![]).unwrap();
    let concepts = vec![Concept {
        label: "p".into(),
        source_role: SourceRole::Population,
        include_in_query: false,
    }];
    let err = pipeline
        .construct_strategy(objective, pico, concepts, vec![], BTreeMap::new())
        .unwrap_err();
    assert_eq!(err.stage, "construct");
}

#[test]
fn review_pass_may_drop_and_reorder_but_never_invent() {
    let options = PipelineOptions { review_query: true, ..PipelineOptions::default() };
    let provider = ScriptProvider::new(vec![(
        Some("Draft strategy concepts"),
        r#"{"concepts":[
            {"label":"p","keywords":["p2","p1","INVENTED TERM"]},
            {"label":"i","keywords":[]}
        ]}"#,
    )]);
    let pipeline = Pipeline::new(
        Gateway::live(provider, "test-model"),
        PromptLibrary::builtin(),
        options,
    );
    let objective = Objective::new("obj").unwrap();
    let pico = PicoElements::new(vec!["p".into()], vec!["i".into()], vec![], vec![]).unwrap();
    let concepts = vec![
        Concept {
            label: "p".into(),
            source_role: SourceRole::Population,
            include_in_query: true,
        },
        Concept {
            label: "i".into(),
            source_role: SourceRole::Intervention,
            include_in_query: true,
        },
    ];
    let sets = vec![
        KeywordSet::new("p", vec!["p1".into(), "p2".into()]).unwrap(),
        KeywordSet::new("i", vec!["i1".into(), "i2".into()]).unwrap(),
    ];
    let artifact = pipeline
        .construct_strategy(objective, pico, concepts, sets, BTreeMap::new())
        .unwrap();
    // reordered, invented term dropped; empty review falls back to original
    assert_eq!(
        artifact.serialized_query,
        "((p2[tiab] OR p1[tiab]) AND (i1[tiab] OR i2[tiab]))"
    );
    assert!(artifact.provenance.contains_key("query_review"));
}

#[test]
fn full_query_narrows_every_single_concept_block() {
    let pipeline = pipeline_with(full_script());
    let artifact = pipeline.run_chain(&full_input()).unwrap();

    let docs: Vec<DocRecord> = (0..30)
        .map(|i| DocRecord {
            doc_id: format!("d{i}"),
            title: match i % 4 {
                0 => "vitamin D trial in postmenopausal women".to_string(),
                1 => "postmenopausal osteoporosis cohort".to_string(),
                2 => "cholecalciferol dosing study".to_string(),
                _ => "unrelated oncology report".to_string(),
            },
            abstract_text: String::new(),
            year: 2015,
        })
        .collect();
    let index = CorpusIndex::build(&docs).unwrap();

    let full = eval_query(&artifact.query, &index);
    assert!(!full.is_empty(), "test corpus should match the strategy");
    for ks in &artifact.keywords {
        let block = ks.to_block(artifact.tag).unwrap();
        let block_docs = eval_query(&block, &index);
        assert!(full.is_subset(&block_docs), "AND must only narrow");
    }
}

#[test]
fn save_and_failure_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = pipeline_with(full_script());
    let artifact = pipeline.run_chain(&full_input()).unwrap();
    let path = save_artifact(dir.path(), "rev-1", &artifact).unwrap();
    let loaded: StrategyArtifact =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(loaded, artifact);
    loaded.validate().unwrap();

    let failing = pipeline_with(ScriptProvider::new(vec![]));
    let err = failing.run_chain(&full_input()).unwrap_err();
    let path = save_failure(dir.path(), "rev-1", &err).unwrap();
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["stage"], "objective");
}

#[test]
fn objective_caps_length() {
    assert!(Objective::new("x".repeat(600)).is_ok());
    assert!(Objective::new("x".repeat(601)).is_err());
    assert!(Objective::new("   ").is_err());
    let t = Objective::truncated(&"y".repeat(700)).unwrap();
    assert_eq!(t.text().chars().count(), 600);
}

#[test]
fn pico_elements_dedup_and_validate() {
    let pico = PicoElements::new(
        vec!["Adults".into(), "adults".into(), " ".into()],
        vec!["metformin".into()],
        vec![],
        vec![],
    )
    .unwrap();
    assert_eq!(pico.population, vec!["Adults"]);
    assert!(PicoElements::new(vec![], vec!["i".into()], vec![], vec![]).is_err());
}
