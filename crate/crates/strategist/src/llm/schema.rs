//! Named response schemas and their validation.
//!
//! Every chat exchange declares which schema its reply must satisfy; the
//! gateway validates the raw text against it and re-prompts with the
//! validation message on failure. Validation is deliberately tolerant of
//! markdown code fences around the JSON body, since chat models add them
//! even when told not to.

use serde::{Deserialize, Serialize};

/// The reply shapes the pipeline stages understand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaName {
    Objective,
    Pico,
    Concepts,
    Keywords,
    QueryReview,
}

impl SchemaName {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemaName::Objective => "objective",
            SchemaName::Pico => "pico",
            SchemaName::Concepts => "concepts",
            SchemaName::Keywords => "keywords",
            SchemaName::QueryReview => "query_review",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "objective" => Some(SchemaName::Objective),
            "pico" => Some(SchemaName::Pico),
            "concepts" => Some(SchemaName::Concepts),
            "keywords" => Some(SchemaName::Keywords),
            "query_review" => Some(SchemaName::QueryReview),
            _ => None,
        }
    }
}

impl std::fmt::Display for SchemaName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Maximum objective length in characters.
pub const OBJECTIVE_MAX_CHARS: usize = 600;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectiveReply {
    pub objective: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PicoReply {
    pub population: Vec<String>,
    pub intervention: Vec<String>,
    #[serde(default)]
    pub comparison: Vec<String>,
    #[serde(default)]
    pub outcome: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConceptReply {
    pub label: String,
    pub source_role: String,
    #[serde(default)]
    pub include_in_query: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConceptsReply {
    pub concepts: Vec<ConceptReply>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeywordsReply {
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReviewedConcept {
    pub label: String,
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryReviewReply {
    pub concepts: Vec<ReviewedConcept>,
}

const VALID_ROLES: [&str; 4] = ["population", "intervention", "comparison", "outcome"];

/// Validate raw reply text against a named schema. On success the parsed
/// JSON value is returned; on failure the message is suitable for feeding
/// back to the model in a repair prompt.
pub fn validate(schema: SchemaName, raw: &str) -> Result<serde_json::Value, String> {
    let body = strip_code_fences(raw);
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| format!("reply is not valid JSON: {e}"))?;

    match schema {
        SchemaName::Objective => {
            let reply: ObjectiveReply = from_value(&value)?;
            let text = reply.objective.trim();
            if text.is_empty() {
                return Err("`objective` must be a non-empty string".into());
            }
            if text.chars().count() > OBJECTIVE_MAX_CHARS {
                return Err(format!(
                    "`objective` is {} characters; at most {OBJECTIVE_MAX_CHARS} are allowed",
                    text.chars().count()
                ));
            }
        }
        SchemaName::Pico => {
            let reply: PicoReply = from_value(&value)?;
            if !reply.population.iter().any(|p| !p.trim().is_empty()) {
                return Err("`population` must contain at least one non-empty phrase".into());
            }
            if !reply.intervention.iter().any(|p| !p.trim().is_empty()) {
                return Err("`intervention` must contain at least one non-empty phrase".into());
            }
        }
        SchemaName::Concepts => {
            let reply: ConceptsReply = from_value(&value)?;
            if reply.concepts.is_empty() {
                return Err("`concepts` must not be empty".into());
            }
            for c in &reply.concepts {
                if c.label.trim().is_empty() {
                    return Err("every concept needs a non-empty `label`".into());
                }
                if !VALID_ROLES.contains(&c.source_role.to_lowercase().as_str()) {
                    return Err(format!(
                        "concept `{}` has unknown source_role `{}`; use one of {}",
                        c.label,
                        c.source_role,
                        VALID_ROLES.join(", ")
                    ));
                }
            }
            // population/intervention concepts are included by default, so
            // this guarantees at least two query blocks downstream
            let included = reply
                .concepts
                .iter()
                .filter(|c| {
                    c.include_in_query.unwrap_or_else(|| {
                        matches!(
                            c.source_role.to_lowercase().as_str(),
                            "population" | "intervention"
                        )
                    })
                })
                .count();
            if included < 2 {
                return Err(
                    "at least two concepts must be marked for the query (population and \
                     intervention concepts count by default)"
                        .into(),
                );
            }
        }
        SchemaName::Keywords => {
            let reply: KeywordsReply = from_value(&value)?;
            if !reply.keywords.iter().any(|k| !k.trim().is_empty()) {
                return Err("`keywords` must contain at least one non-empty phrase".into());
            }
        }
        SchemaName::QueryReview => {
            let reply: QueryReviewReply = from_value(&value)?;
            for c in &reply.concepts {
                if c.label.trim().is_empty() {
                    return Err("every reviewed concept needs a non-empty `label`".into());
                }
            }
        }
    }
    Ok(value)
}

fn from_value<T: serde::de::DeserializeOwned>(value: &serde_json::Value) -> Result<T, String> {
    serde_json::from_value(value.clone()).map_err(|e| format!("reply does not match schema: {e}"))
}

/// Drop a surrounding ``` / ```json fence if present.
fn strip_code_fences(raw: &str) -> &str {
    let trimmed = raw.trim();
    let Some(rest) = trimmed.strip_prefix("```") else {
        return trimmed;
    };
    let rest = rest.strip_prefix("json").unwrap_or(rest);
    let rest = rest.trim_start_matches(['\r', '\n']);
    rest.strip_suffix("```").map(str::trim).unwrap_or(rest)
}
