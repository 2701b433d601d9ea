//! The chained stages that turn a review objective into a search strategy:
//! objective reformulation, PICO extraction, concept identification,
//! keyword expansion, and deterministic Boolean assembly.
//!
//! Each LLM stage is one structured exchange through the [`crate::llm`]
//! gateway; the final combine step is pure (no model call), so a strategy
//! artifact is a reproducible function of the recorded exchanges. Chains
//! may also enter mid-way: at PICO extraction when the objective is already
//! known, or at concept identification when PICO elements are supplied
//! externally.

mod prompts;

pub use prompts::{PromptLibrary, TEMPLATE_NAMES};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{
    schema::{self, ConceptsReply, KeywordsReply, ObjectiveReply, PicoReply, QueryReviewReply},
    Gateway, GatewayError, PromptExchange, SchemaName,
};
use crate::query::{
    build_concept_block, combine_concepts, serialize_pubmed, FieldTag, QueryError, QueryNode,
};

/// Provenance marker for stages satisfied by caller-supplied data instead
/// of a recorded exchange.
pub const EXTERNAL_OBJECTIVE: &str = "external-objective";
pub const EXTERNAL_PICO: &str = "external-pico";

/// Keyword cap per concept; keeps serialized queries under PubMed URL
/// limits.
pub const MAX_KEYWORDS_PER_CONCEPT: usize = 25;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Query(#[from] QueryError),
}

/// A stage failure, named so callers can report which link of the chain
/// broke.
#[derive(Debug, Error)]
#[error("stage `{stage}` failed: {source}")]
pub struct StageError {
    pub stage: &'static str,
    #[source]
    pub source: PipelineError,
}

impl StageError {
    fn new(stage: &'static str, source: impl Into<PipelineError>) -> Self {
        StageError {
            stage,
            source: source.into(),
        }
    }
}

/// Chain failure carrying whatever the earlier stages produced, so partial
/// progress can be persisted next to the error.
#[derive(Debug, Error)]
#[error("{error}")]
pub struct ChainError {
    #[source]
    pub error: StageError,
    pub partial: Box<PartialArtifact>,
}

/// The review's research question and focus, at most one to three
/// sentences and 600 characters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Objective {
    text: String,
}

impl Objective {
    pub const MAX_CHARS: usize = schema::OBJECTIVE_MAX_CHARS;

    pub fn new(text: impl Into<String>) -> Result<Self, PipelineError> {
        let text = text.into().trim().to_string();
        if text.is_empty() {
            return Err(PipelineError::InvalidInput("objective is empty".into()));
        }
        if text.chars().count() > Self::MAX_CHARS {
            return Err(PipelineError::InvalidInput(format!(
                "objective is {} characters (max {})",
                text.chars().count(),
                Self::MAX_CHARS
            )));
        }
        Ok(Objective { text })
    }

    /// Build from free text, truncating to the length cap. Used when the
    /// objective is a stand-in (e.g. a review title for PICO-start runs).
    pub fn truncated(text: &str) -> Result<Self, PipelineError> {
        Self::new(text.chars().take(Self::MAX_CHARS).collect::<String>())
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

/// Which PICO element a concept came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceRole {
    Population,
    Intervention,
    Comparison,
    Outcome,
}

impl SourceRole {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceRole::Population => "population",
            SourceRole::Intervention => "intervention",
            SourceRole::Comparison => "comparison",
            SourceRole::Outcome => "outcome",
        }
    }
}

impl std::str::FromStr for SourceRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_lowercase().as_str() {
            "population" => Ok(SourceRole::Population),
            "intervention" => Ok(SourceRole::Intervention),
            "comparison" => Ok(SourceRole::Comparison),
            "outcome" => Ok(SourceRole::Outcome),
            other => Err(format!("unknown source role `{other}`")),
        }
    }
}

impl std::fmt::Display for SourceRole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Structured PICO phrase lists. Population and intervention are always
/// non-empty; phrases are deduplicated case-insensitively.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PicoElements {
    pub population: Vec<String>,
    pub intervention: Vec<String>,
    #[serde(default)]
    pub comparison: Vec<String>,
    #[serde(default)]
    pub outcome: Vec<String>,
}

impl PicoElements {
    pub fn new(
        population: Vec<String>,
        intervention: Vec<String>,
        comparison: Vec<String>,
        outcome: Vec<String>,
    ) -> Result<Self, PipelineError> {
        let population = clean_phrases(population);
        let intervention = clean_phrases(intervention);
        if population.is_empty() {
            return Err(PipelineError::InvalidInput(
                "population has no phrases".into(),
            ));
        }
        if intervention.is_empty() {
            return Err(PipelineError::InvalidInput(
                "intervention has no phrases".into(),
            ));
        }
        Ok(PicoElements {
            population,
            intervention,
            comparison: clean_phrases(comparison),
            outcome: clean_phrases(outcome),
        })
    }

    /// The phrase list for a role; empty slices mean the role was absent.
    pub fn phrases_for(&self, role: SourceRole) -> &[String] {
        match role {
            SourceRole::Population => &self.population,
            SourceRole::Intervention => &self.intervention,
            SourceRole::Comparison => &self.comparison,
            SourceRole::Outcome => &self.outcome,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.population.iter().all(|p| p.trim().is_empty()) {
            return Err(PipelineError::InvalidInput(
                "population has no phrases".into(),
            ));
        }
        if self.intervention.iter().all(|p| p.trim().is_empty()) {
            return Err(PipelineError::InvalidInput(
                "intervention has no phrases".into(),
            ));
        }
        Ok(())
    }
}

/// Trim, drop empties, dedup case-insensitively keeping first occurrence.
fn clean_phrases(phrases: Vec<String>) -> Vec<String> {
    let mut seen: Vec<String> = Vec::new();
    let mut out = Vec::new();
    for phrase in phrases {
        let phrase = phrase.trim().to_string();
        if phrase.is_empty() {
            continue;
        }
        let folded = phrase.to_lowercase();
        if seen.contains(&folded) {
            continue;
        }
        seen.push(folded);
        out.push(phrase);
    }
    out
}

/// A searchable concept derived from one PICO role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub label: String,
    pub source_role: SourceRole,
    pub include_in_query: bool,
}

/// The expanded keywords for one concept: synonyms, spelling variants, and
/// related terminology, the concept itself (or a variant of it) included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSet {
    pub concept_label: String,
    pub keywords: Vec<String>,
}

impl KeywordSet {
    /// Cleans and caps the keyword list. If no keyword is a variant of the
    /// label (substring either way, case-insensitive), the label itself is
    /// prepended so the set always covers its concept.
    pub fn new(
        concept_label: impl Into<String>,
        keywords: Vec<String>,
    ) -> Result<Self, PipelineError> {
        let concept_label = concept_label.into().trim().to_string();
        if concept_label.is_empty() {
            return Err(PipelineError::InvalidInput("concept label is empty".into()));
        }
        let mut keywords: Vec<String> = clean_phrases(keywords)
            .into_iter()
            .filter(|k| !k.contains('"'))
            .collect();
        let label_folded = concept_label.to_lowercase();
        let has_variant = keywords.iter().any(|k| {
            let folded = k.to_lowercase();
            folded.contains(&label_folded) || label_folded.contains(&folded)
        });
        if !has_variant && !concept_label.contains('"') {
            keywords.insert(0, concept_label.clone());
        }
        keywords.truncate(MAX_KEYWORDS_PER_CONCEPT);
        if keywords.is_empty() {
            return Err(PipelineError::InvalidInput(format!(
                "concept `{concept_label}` has no usable keywords"
            )));
        }
        Ok(KeywordSet {
            concept_label,
            keywords,
        })
    }

    /// OR-block over this set's keywords.
    pub fn to_block(&self, tag: FieldTag) -> Result<QueryNode, QueryError> {
        build_concept_block(&self.keywords, tag)
    }
}

/// Everything one chain run produced, persisted as a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyArtifact {
    pub objective: Objective,
    pub pico: PicoElements,
    pub concepts: Vec<Concept>,
    pub keywords: Vec<KeywordSet>,
    pub tag: FieldTag,
    pub query: QueryNode,
    pub serialized_query: String,
    /// Stage name (or `keywords:<label>`) to fixture digest, with
    /// `external-objective` / `external-pico` marking supplied inputs.
    pub provenance: BTreeMap<String, String>,
}

impl StrategyArtifact {
    /// Check every artifact invariant: the serialized query matches the
    /// tree, every included concept has a keyword set, and the query is
    /// exactly the deterministic combination of the included concepts'
    /// blocks in concept order.
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.pico.validate()?;
        if self.serialized_query != serialize_pubmed(&self.query) {
            return Err(PipelineError::InvalidInput(
                "serialized_query does not match query tree".into(),
            ));
        }
        let included: Vec<&Concept> = self
            .concepts
            .iter()
            .filter(|c| c.include_in_query)
            .collect();
        if included.is_empty() {
            return Err(PipelineError::InvalidInput(
                "no concept is included in the query".into(),
            ));
        }
        let mut blocks = Vec::with_capacity(included.len());
        for concept in &included {
            let set = self
                .keywords
                .iter()
                .find(|ks| ks.concept_label.eq_ignore_ascii_case(&concept.label))
                .ok_or_else(|| {
                    PipelineError::InvalidInput(format!(
                        "included concept `{}` has no keyword set",
                        concept.label
                    ))
                })?;
            blocks.push(set.to_block(self.tag)?);
        }
        let derived = combine_concepts(blocks)?;
        if derived != self.query {
            return Err(PipelineError::InvalidInput(
                "query tree is not the combination of the included concept blocks".into(),
            ));
        }
        Ok(())
    }

    /// Canonical JSON bytes (pretty, trailing newline) — the persisted
    /// representation, byte-identical for equal artifacts.
    pub fn to_json_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("artifact serializes");
        bytes.push(b'\n');
        bytes
    }
}

/// Progress snapshot persisted when a chain fails part-way.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PartialArtifact {
    pub objective: Option<Objective>,
    pub pico: Option<PicoElements>,
    pub concepts: Option<Vec<Concept>>,
    pub keywords: Vec<KeywordSet>,
    pub provenance: BTreeMap<String, String>,
}

/// Where a chain starts.
#[derive(Debug, Clone)]
pub enum ChainEntry {
    /// Reformulate the objective from title+abstract, then run all stages.
    Full,
    /// The objective is supplied; start at PICO extraction.
    ObjectiveStart(Objective),
    /// PICO elements are supplied; start at concept identification.
    PicoStart(PicoElements),
}

/// One chain invocation.
#[derive(Debug, Clone)]
pub struct ChainInput {
    pub title: String,
    pub abstract_text: String,
    pub entry: ChainEntry,
}

/// Knobs that shape the produced query.
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    /// Field tag applied to every term.
    pub default_tag: FieldTag,
    /// Roles whose concepts enter the query when the model does not say
    /// explicitly. Population and intervention by default.
    pub included_roles: Vec<SourceRole>,
    /// Run the optional keyword-review exchange before assembly. The
    /// review may reorder or drop keywords, never invent them.
    pub review_query: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            default_tag: FieldTag::TitleAbstract,
            included_roles: vec![SourceRole::Population, SourceRole::Intervention],
            review_query: false,
        }
    }
}

/// The chained pipeline: a gateway, a prompt library, and options.
pub struct Pipeline {
    gateway: Gateway,
    prompts: PromptLibrary,
    options: PipelineOptions,
}

impl Pipeline {
    pub fn new(gateway: Gateway, prompts: PromptLibrary, options: PipelineOptions) -> Self {
        Pipeline {
            gateway,
            prompts,
            options,
        }
    }

    pub fn options(&self) -> &PipelineOptions {
        &self.options
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    fn exchange(
        &self,
        stage: &'static str,
        system: String,
        user: String,
        schema: SchemaName,
    ) -> Result<(serde_json::Value, String), StageError> {
        let exchange =
            PromptExchange::new(system, user, schema).map_err(|e| StageError::new(stage, e))?;
        let digest = self.gateway.digest_of(&exchange);
        let reply = self
            .gateway
            .complete_structured(&exchange)
            .map_err(|e| StageError::new(stage, e))?;
        Ok((reply.parsed, digest))
    }

    /// Step 0: derive a structured objective from the review title and
    /// abstract.
    pub fn reformulate_objective(
        &self,
        title: &str,
        abstract_text: &str,
    ) -> Result<(Objective, String), StageError> {
        const STAGE: &str = "objective";
        if title.trim().is_empty() {
            return Err(StageError::new(
                STAGE,
                PipelineError::InvalidInput("title is empty".into()),
            ));
        }
        let system = self.prompts.render("objective_system", &[]);
        let user = self.prompts.render(
            "objective_user",
            &[("title", title), ("abstract", abstract_text)],
        );
        let (parsed, digest) = self.exchange(STAGE, system, user, SchemaName::Objective)?;
        let reply: ObjectiveReply =
            serde_json::from_value(parsed).expect("schema-validated objective reply");
        let objective = Objective::new(reply.objective).map_err(|e| StageError::new(STAGE, e))?;
        Ok((objective, digest))
    }

    /// Step 1: decompose the objective into PICO elements.
    pub fn extract_pico(
        &self,
        objective: &Objective,
    ) -> Result<(PicoElements, String), StageError> {
        const STAGE: &str = "pico";
        let system = self.prompts.render("pico_system", &[]);
        let user = self
            .prompts
            .render("pico_user", &[("objective", objective.text())]);
        let (parsed, digest) = self.exchange(STAGE, system, user, SchemaName::Pico)?;
        let reply: PicoReply = serde_json::from_value(parsed).expect("schema-validated pico reply");
        let pico = PicoElements::new(
            reply.population,
            reply.intervention,
            reply.comparison,
            reply.outcome,
        )
        .map_err(|e| StageError::new(STAGE, e))?;
        Ok((pico, digest))
    }

    /// Step 2: refine PICO elements into searchable concepts. Concepts
    /// whose role is absent from the input are dropped; inclusion defaults
    /// to the configured roles when the model does not say.
    pub fn identify_concepts(
        &self,
        pico: &PicoElements,
    ) -> Result<(Vec<Concept>, String), StageError> {
        const STAGE: &str = "concepts";
        let join = |phrases: &[String]| {
            if phrases.is_empty() {
                "(none)".to_string()
            } else {
                phrases.join("; ")
            }
        };
        let system = self.prompts.render("concepts_system", &[]);
        let user = self.prompts.render(
            "concepts_user",
            &[
                ("population", &join(&pico.population)),
                ("intervention", &join(&pico.intervention)),
                ("comparison", &join(&pico.comparison)),
                ("outcome", &join(&pico.outcome)),
            ],
        );
        let (parsed, digest) = self.exchange(STAGE, system, user, SchemaName::Concepts)?;
        let reply: ConceptsReply =
            serde_json::from_value(parsed).expect("schema-validated concepts reply");

        let mut seen_labels: Vec<String> = Vec::new();
        let mut concepts = Vec::new();
        for c in reply.concepts {
            let role: SourceRole = c
                .source_role
                .parse()
                .map_err(|e: String| StageError::new(STAGE, PipelineError::InvalidInput(e)))?;
            if pico.phrases_for(role).is_empty() {
                continue; // concept traces to a role the input did not have
            }
            let label = c.label.trim().to_string();
            let folded = label.to_lowercase();
            if seen_labels.contains(&folded) {
                continue;
            }
            seen_labels.push(folded);
            let include_in_query = c
                .include_in_query
                .unwrap_or_else(|| self.options.included_roles.contains(&role));
            concepts.push(Concept {
                label,
                source_role: role,
                include_in_query,
            });
        }
        let included = concepts.iter().filter(|c| c.include_in_query).count();
        if included < 2 {
            return Err(StageError::new(
                STAGE,
                PipelineError::InvalidInput(format!(
                    "only {included} concept(s) marked for the query; at least 2 required"
                )),
            ));
        }
        Ok((concepts, digest))
    }

    /// Step 3: expand one concept into its keyword set. The prompt depends
    /// only on the concept, so a PICO-start run and a full run over the
    /// same PICO elements resolve to the same recorded exchanges.
    pub fn expand_keywords(&self, concept: &Concept) -> Result<(KeywordSet, String), StageError> {
        const STAGE: &str = "keywords";
        let system = self.prompts.render("keywords_system", &[]);
        let user = self.prompts.render(
            "keywords_user",
            &[
                ("concept_label", &concept.label),
                ("source_role", concept.source_role.as_str()),
            ],
        );
        let (parsed, digest) = self.exchange(STAGE, system, user, SchemaName::Keywords)?;
        let reply: KeywordsReply =
            serde_json::from_value(parsed).expect("schema-validated keywords reply");
        let set = KeywordSet::new(concept.label.clone(), reply.keywords)
            .map_err(|e| StageError::new(STAGE, e))?;
        Ok((set, digest))
    }

    /// Step 4: assemble the Boolean query. Purely deterministic: each
    /// included concept's keywords become an OR block, blocks are ANDed in
    /// concept order. With `review_query` set, one extra exchange may
    /// reorder or drop keywords first — replies proposing unknown keywords
    /// are ignored term-by-term, and a review that would empty a concept
    /// falls back to the original set.
    pub fn construct_strategy(
        &self,
        objective: Objective,
        pico: PicoElements,
        concepts: Vec<Concept>,
        mut keyword_sets: Vec<KeywordSet>,
        mut provenance: BTreeMap<String, String>,
    ) -> Result<StrategyArtifact, StageError> {
        const STAGE: &str = "construct";
        if self.options.review_query {
            let digest = self.review_keywords(&mut keyword_sets)?;
            provenance.insert("query_review".to_string(), digest);
        }

        let included: Vec<&Concept> = concepts.iter().filter(|c| c.include_in_query).collect();
        if included.is_empty() {
            return Err(StageError::new(
                STAGE,
                PipelineError::InvalidInput("no concept is included in the query".into()),
            ));
        }
        let mut blocks = Vec::with_capacity(included.len());
        for concept in &included {
            let set = keyword_sets
                .iter()
                .find(|ks| ks.concept_label.eq_ignore_ascii_case(&concept.label))
                .ok_or_else(|| {
                    StageError::new(
                        STAGE,
                        PipelineError::InvalidInput(format!(
                            "included concept `{}` has no keyword set",
                            concept.label
                        )),
                    )
                })?;
            blocks.push(
                set.to_block(self.options.default_tag)
                    .map_err(|e| StageError::new(STAGE, e))?,
            );
        }
        let query = combine_concepts(blocks).map_err(|e| StageError::new(STAGE, e))?;
        let serialized_query = serialize_pubmed(&query);
        let artifact = StrategyArtifact {
            objective,
            pico,
            concepts,
            keywords: keyword_sets,
            tag: self.options.default_tag,
            query,
            serialized_query,
            provenance,
        };
        artifact.validate().map_err(|e| StageError::new(STAGE, e))?;
        Ok(artifact)
    }

    /// Optional review exchange over the keyword sets (see
    /// [`Pipeline::construct_strategy`]).
    fn review_keywords(&self, keyword_sets: &mut [KeywordSet]) -> Result<String, StageError> {
        const STAGE: &str = "query_review";
        let concepts_json = serde_json::to_string_pretty(
            &keyword_sets
                .iter()
                .map(|ks| serde_json::json!({"label": ks.concept_label, "keywords": ks.keywords}))
                .collect::<Vec<_>>(),
        )
        .expect("keyword sets serialize");
        let system = self.prompts.render("query_review_system", &[]);
        let user = self
            .prompts
            .render("query_review_user", &[("concepts_json", &concepts_json)]);
        let (parsed, digest) = self.exchange(STAGE, system, user, SchemaName::QueryReview)?;
        let reply: QueryReviewReply =
            serde_json::from_value(parsed).expect("schema-validated review reply");

        for reviewed in reply.concepts {
            let Some(set) = keyword_sets
                .iter_mut()
                .find(|ks| ks.concept_label.eq_ignore_ascii_case(&reviewed.label))
            else {
                continue; // reviewer invented a concept; ignore
            };
            let original: Vec<String> = set.keywords.clone();
            let kept: Vec<String> = reviewed
                .keywords
                .iter()
                .filter_map(|k| {
                    original
                        .iter()
                        .find(|o| o.eq_ignore_ascii_case(k.trim()))
                        .cloned()
                })
                .collect();
            if !kept.is_empty() {
                set.keywords = clean_phrases(kept);
            }
        }
        Ok(digest)
    }

    /// Run the chain for one review. Stage failures return a [`ChainError`]
    /// carrying the partial artifact built so far.
    pub fn run_chain(&self, input: &ChainInput) -> Result<StrategyArtifact, ChainError> {
        let mut partial = PartialArtifact::default();

        let objective = match &input.entry {
            ChainEntry::Full => {
                let (objective, digest) = self
                    .reformulate_objective(&input.title, &input.abstract_text)
                    .map_err(|e| chain_err(e, &partial))?;
                partial.provenance.insert("objective".into(), digest);
                objective
            }
            ChainEntry::ObjectiveStart(objective) => {
                partial
                    .provenance
                    .insert("objective".into(), EXTERNAL_OBJECTIVE.into());
                objective.clone()
            }
            ChainEntry::PicoStart(_) => {
                partial
                    .provenance
                    .insert("objective".into(), EXTERNAL_PICO.into());
                let fallback = if input.title.trim().is_empty() {
                    "Externally supplied PICO elements."
                } else {
                    input.title.as_str()
                };
                Objective::truncated(fallback)
                    .map_err(|e| chain_err(StageError::new("objective", e), &partial))?
            }
        };
        partial.objective = Some(objective.clone());

        let pico = match &input.entry {
            ChainEntry::PicoStart(pico) => {
                partial
                    .provenance
                    .insert("pico".into(), EXTERNAL_PICO.into());
                pico.clone()
            }
            _ => {
                let (pico, digest) = self
                    .extract_pico(&objective)
                    .map_err(|e| chain_err(e, &partial))?;
                partial.provenance.insert("pico".into(), digest);
                pico
            }
        };
        partial.pico = Some(pico.clone());

        let (concepts, digest) = self
            .identify_concepts(&pico)
            .map_err(|e| chain_err(e, &partial))?;
        partial.provenance.insert("concepts".into(), digest);
        partial.concepts = Some(concepts.clone());

        let mut keyword_sets = Vec::new();
        for concept in concepts.iter().filter(|c| c.include_in_query) {
            let (set, digest) = self
                .expand_keywords(concept)
                .map_err(|e| chain_err(e, &partial))?;
            partial
                .provenance
                .insert(format!("keywords:{}", concept.label), digest);
            partial.keywords.push(set.clone());
            keyword_sets.push(set);
        }

        self.construct_strategy(
            objective,
            pico,
            concepts,
            keyword_sets,
            partial.provenance.clone(),
        )
        .map_err(|e| chain_err(e, &partial))
    }
}

fn chain_err(error: StageError, partial: &PartialArtifact) -> ChainError {
    ChainError {
        error,
        partial: Box::new(partial.clone()),
    }
}

/// Persist an artifact as `<dir>/<review_id>.json`.
pub fn save_artifact(
    dir: &Path,
    review_id: &str,
    artifact: &StrategyArtifact,
) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{review_id}.json"));
    std::fs::write(&path, artifact.to_json_bytes())?;
    Ok(path)
}

/// Persist a failed chain as `<dir>/<review_id>.failed.json`, stage name
/// and partial progress included.
pub fn save_failure(dir: &Path, review_id: &str, error: &ChainError) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{review_id}.failed.json"));
    let doc = serde_json::json!({
        "stage": error.error.stage,
        "error": error.error.to_string(),
        "partial": error.partial,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("failure serializes");
    bytes.push(b'\n');
    std::fs::write(&path, bytes)?;
    Ok(path)
}

#[cfg(test)]
mod tests;
