//! Provider-agnostic chat access with structured-output validation and a
//! record/replay fixture store.
//!
//! Every exchange names a response schema; invalid replies trigger a repair
//! re-prompt (the validation error appended to the user prompt) up to a
//! configured attempt cap. In `record` mode the final raw reply is persisted
//! under the exchange digest; in `replay` mode no provider is contacted and
//! the recorded reply is returned byte-identically, which makes every
//! pipeline stage deterministic under test.

mod fixtures;
mod provider;
pub mod schema;

pub use fixtures::{exchange_digest, FixtureRecord, FixtureStore};
pub use provider::{ChatProvider, ChatRequest, HttpChatProvider};
pub use schema::SchemaName;

use std::sync::Arc;

use thiserror::Error;

/// Decoding temperature fixed for reproducibility.
pub const DEFAULT_TEMPERATURE: f64 = 0.0;
/// Validation-failure re-prompts before giving up.
pub const DEFAULT_MAX_ATTEMPTS: u32 = 3;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no fixture recorded for digest {digest}")]
    MissingFixture { digest: String },
    #[error("reply failed `{schema}` schema validation after {attempts} attempt(s): {last_error}")]
    SchemaInvalid {
        schema: String,
        attempts: u32,
        last_error: String,
    },
    #[error("provider http {status}: {body_excerpt}")]
    Http { status: u16, body_excerpt: String },
    #[error("provider transport: {0}")]
    Transport(String),
    #[error("gateway not configured for {0} mode")]
    NotConfigured(&'static str),
    #[error("fixture store: {0}")]
    Io(#[from] std::io::Error),
}

/// How exchanges are satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Call the provider; nothing is persisted.
    Live,
    /// Call the provider and persist the final reply as a fixture.
    Record,
    /// Serve every exchange from recorded fixtures; no network.
    Replay,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(Mode::Live),
            "record" => Ok(Mode::Record),
            "replay" => Ok(Mode::Replay),
            other => Err(format!(
                "unknown mode `{other}` (expected live|record|replay)"
            )),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Live => "live",
            Mode::Record => "record",
            Mode::Replay => "replay",
        })
    }
}

/// One validated prompt pair bound for the model.
#[derive(Debug, Clone)]
pub struct PromptExchange {
    pub system_prompt: String,
    pub user_prompt: String,
    pub schema: SchemaName,
    pub temperature: f64,
}

impl PromptExchange {
    pub fn new(
        system_prompt: impl Into<String>,
        user_prompt: impl Into<String>,
        schema: SchemaName,
    ) -> Result<Self, GatewayError> {
        let system_prompt = system_prompt.into();
        let user_prompt = user_prompt.into();
        if system_prompt.trim().is_empty() || user_prompt.trim().is_empty() {
            return Err(GatewayError::InvalidInput(
                "prompts must be non-empty".into(),
            ));
        }
        Ok(PromptExchange {
            system_prompt,
            user_prompt,
            schema,
            temperature: DEFAULT_TEMPERATURE,
        })
    }

    pub fn with_temperature(mut self, temperature: f64) -> Result<Self, GatewayError> {
        if !(0.0..=2.0).contains(&temperature) {
            return Err(GatewayError::InvalidInput(format!(
                "temperature {temperature} outside [0, 2]"
            )));
        }
        self.temperature = temperature;
        Ok(self)
    }
}

/// A schema-validated reply.
#[derive(Debug, Clone)]
pub struct StructuredReply {
    pub raw_text: String,
    pub parsed: serde_json::Value,
    pub attempts: u32,
}

/// Chat-completion access in one of three modes.
pub struct Gateway {
    model: String,
    mode: Mode,
    provider: Option<Arc<dyn ChatProvider>>,
    store: Option<FixtureStore>,
    max_attempts: u32,
}

impl Gateway {
    /// Fixture-only gateway; every exchange must already be recorded.
    pub fn replay(store: FixtureStore, model: impl Into<String>) -> Self {
        Gateway {
            model: model.into(),
            mode: Mode::Replay,
            provider: None,
            store: Some(store),
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }

    pub fn live(provider: Arc<dyn ChatProvider>, model: impl Into<String>) -> Self {
        Gateway {
            model: model.into(),
            mode: Mode::Live,
            provider: Some(provider),
            store: None,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }

    pub fn record(
        provider: Arc<dyn ChatProvider>,
        store: FixtureStore,
        model: impl Into<String>,
    ) -> Self {
        Gateway {
            model: model.into(),
            mode: Mode::Record,
            provider: Some(provider),
            store: Some(store),
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }

    pub fn with_max_attempts(mut self, max_attempts: u32) -> Self {
        self.max_attempts = max_attempts.max(1);
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    /// The fixture key this exchange resolves to.
    pub fn digest_of(&self, exchange: &PromptExchange) -> String {
        exchange_digest(
            &self.model,
            &exchange.system_prompt,
            &exchange.user_prompt,
            exchange.schema.as_str(),
        )
    }

    /// Run one exchange and return the schema-validated reply.
    pub fn complete_structured(
        &self,
        exchange: &PromptExchange,
    ) -> Result<StructuredReply, GatewayError> {
        let digest = self.digest_of(exchange);
        match self.mode {
            Mode::Replay => {
                let store = self
                    .store
                    .as_ref()
                    .ok_or(GatewayError::NotConfigured("replay"))?;
                let record = store
                    .load(&digest)?
                    .ok_or(GatewayError::MissingFixture { digest })?;
                let parsed = schema::validate(exchange.schema, &record.response).map_err(|e| {
                    GatewayError::SchemaInvalid {
                        schema: exchange.schema.as_str().into(),
                        attempts: 1,
                        last_error: e,
                    }
                })?;
                Ok(StructuredReply {
                    raw_text: record.response,
                    parsed,
                    attempts: 1,
                })
            }
            Mode::Live | Mode::Record => {
                let provider = self
                    .provider
                    .as_ref()
                    .ok_or(GatewayError::NotConfigured("live"))?;
                let mut last_error = String::new();
                for attempt in 1..=self.max_attempts {
                    let user_prompt = if attempt == 1 {
                        exchange.user_prompt.clone()
                    } else {
                        repair_prompt(&exchange.user_prompt, &last_error)
                    };
                    let raw = provider.complete(&ChatRequest {
                        model: &self.model,
                        system: &exchange.system_prompt,
                        user: &user_prompt,
                        temperature: exchange.temperature,
                    })?;
                    match schema::validate(exchange.schema, &raw) {
                        Ok(parsed) => {
                            if self.mode == Mode::Record {
                                let store = self
                                    .store
                                    .as_ref()
                                    .ok_or(GatewayError::NotConfigured("record"))?;
                                // keyed by the original exchange, not the
                                // repair prompt, so replay stays stable
                                store.store(&FixtureRecord {
                                    model: self.model.clone(),
                                    system: exchange.system_prompt.clone(),
                                    user: exchange.user_prompt.clone(),
                                    schema: exchange.schema.as_str().into(),
                                    response: raw.clone(),
                                })?;
                            }
                            return Ok(StructuredReply {
                                raw_text: raw,
                                parsed,
                                attempts: attempt,
                            });
                        }
                        Err(e) => last_error = e,
                    }
                }
                Err(GatewayError::SchemaInvalid {
                    schema: exchange.schema.as_str().into(),
                    attempts: self.max_attempts,
                    last_error,
                })
            }
        }
    }
}

fn repair_prompt(original_user: &str, validation_error: &str) -> String {
    format!(
        "{original_user}\n\nYour previous reply was rejected: {validation_error}\n\
         Reply again with only a JSON object that satisfies the required schema."
    )
}
