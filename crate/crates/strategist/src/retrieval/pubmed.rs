//! PubMed E-utilities ESearch client.
//!
//! One GET per search against `esearch.fcgi` with `retmode=json`, throttled
//! through a process-wide [`RateLimiter`]: 3 requests/second without an API
//! key, 10 with one. Transient failures are retried three times with
//! exponential backoff; a PubMed error payload is surfaced as
//! [`PubMedError::Api`] so callers can mark the affected review instead of
//! aborting a run.

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::rate_limit::RateLimiter;

pub const EUTILS_BASE_URL: &str = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils";
/// PubMed returns at most this many ids per ESearch call.
pub const MAX_RETMAX: u32 = 1000;
/// Request budget without an API key.
pub const RPS_WITHOUT_KEY: f64 = 3.0;
/// Request budget with an API key.
pub const RPS_WITH_KEY: f64 = 10.0;

const RETRY_ATTEMPTS: u32 = 3;
const RETRY_BASE_DELAY: Duration = Duration::from_millis(250);

#[derive(Debug, Error)]
pub enum PubMedError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("http {status}: {body_excerpt}")]
    Http { status: u16, body_excerpt: String },
    #[error("rate limited by server{}", retry_after.map(|d| format!(" (retry after {}s)", d.as_secs())).unwrap_or_default())]
    RateLimited { retry_after: Option<Duration> },
    #[error("pubmed api error: {0}")]
    Api(String),
    #[error("transport: {0}")]
    Transport(String),
}

/// Result of one search call.
///
/// `truncated` is true exactly when the server-side hit count exceeds the
/// number of ids returned, i.e. the per-call cap cut the list off.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub ids: Vec<String>,
    pub total_count: u64,
    pub truncated: bool,
}

impl SearchOutcome {
    pub fn new(ids: Vec<String>, total_count: u64) -> Self {
        let truncated = total_count > ids.len() as u64;
        SearchOutcome {
            ids,
            total_count,
            truncated,
        }
    }
}

/// Per-call limits: result cap and optional publication-date window
/// (years, applied with `datetype=pdat`).
#[derive(Debug, Clone, Copy)]
pub struct SearchLimits {
    pub retmax: u32,
    pub date_floor: Option<i32>,
    pub date_ceiling: Option<i32>,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            retmax: MAX_RETMAX,
            date_floor: None,
            date_ceiling: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PubMedConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    /// Overrides the key-based default budget when set.
    pub requests_per_second: Option<f64>,
}

impl Default for PubMedConfig {
    fn default() -> Self {
        PubMedConfig {
            base_url: EUTILS_BASE_URL.to_string(),
            api_key: std::env::var("PUBMED_API_KEY")
                .ok()
                .filter(|k| !k.is_empty()),
            requests_per_second: None,
        }
    }
}

impl PubMedConfig {
    pub fn effective_rps(&self) -> f64 {
        self.requests_per_second
            .unwrap_or(if self.api_key.is_some() {
                RPS_WITH_KEY
            } else {
                RPS_WITHOUT_KEY
            })
    }
}

/// Shareable ESearch client. All clones and all clients built with the same
/// budget go through one process-wide rate limiter.
pub struct PubMedClient {
    http: reqwest::blocking::Client,
    config: PubMedConfig,
    limiter: Arc<RateLimiter>,
}

impl PubMedClient {
    pub fn new(config: PubMedConfig) -> Self {
        let limiter = RateLimiter::shared(config.effective_rps());
        Self::with_limiter(config, limiter)
    }

    pub fn with_limiter(config: PubMedConfig, limiter: Arc<RateLimiter>) -> Self {
        PubMedClient {
            http: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(30))
                .build()
                .expect("reqwest client"),
            config,
            limiter,
        }
    }

    /// Run an ESearch query, returning PMIDs and the reported total count.
    /// `retmax` is clamped to the PubMed per-call cap of 1000.
    pub fn esearch(
        &self,
        query: &str,
        limits: &SearchLimits,
    ) -> Result<SearchOutcome, PubMedError> {
        if query.trim().is_empty() {
            return Err(PubMedError::InvalidInput("empty query".into()));
        }
        let retmax = limits.retmax.min(MAX_RETMAX);
        let url = format!(
            "{}/esearch.fcgi",
            self.config.base_url.trim_end_matches('/')
        );

        let mut params: Vec<(&str, String)> = vec![
            ("db", "pubmed".into()),
            ("term", query.into()),
            ("retmax", retmax.to_string()),
            ("retmode", "json".into()),
        ];
        if let Some(key) = &self.config.api_key {
            params.push(("api_key", key.clone()));
        }
        if limits.date_floor.is_some() || limits.date_ceiling.is_some() {
            params.push(("mindate", limits.date_floor.unwrap_or(1000).to_string()));
            params.push(("maxdate", limits.date_ceiling.unwrap_or(3000).to_string()));
            params.push(("datetype", "pdat".into()));
        }

        let mut last_err = PubMedError::Transport("no attempt made".into());
        for attempt in 0..RETRY_ATTEMPTS {
            self.limiter.acquire();
            match self.attempt(&url, &params) {
                Ok(body) => return parse_esearch_response(&body),
                Err(err) => {
                    let backoff = match &err {
                        PubMedError::RateLimited { retry_after } => {
                            Some(retry_after.unwrap_or(RETRY_BASE_DELAY * 2u32.pow(attempt)))
                        }
                        PubMedError::Http { status, .. } if *status >= 500 => {
                            Some(RETRY_BASE_DELAY * 2u32.pow(attempt))
                        }
                        PubMedError::Transport(_) => Some(RETRY_BASE_DELAY * 2u32.pow(attempt)),
                        _ => None,
                    };
                    match backoff {
                        Some(delay) if attempt + 1 < RETRY_ATTEMPTS => {
                            last_err = err;
                            std::thread::sleep(delay);
                        }
                        _ => return Err(err),
                    }
                }
            }
        }
        Err(last_err)
    }

    fn attempt(&self, url: &str, params: &[(&str, String)]) -> Result<String, PubMedError> {
        let response = self
            .http
            .get(url)
            .query(params)
            .send()
            .map_err(|e| PubMedError::Transport(e.to_string()))?;
        let status = response.status();
        if status.as_u16() == 429 {
            let retry_after = response
                .headers()
                .get("retry-after")
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.parse::<u64>().ok())
                .map(Duration::from_secs);
            return Err(PubMedError::RateLimited { retry_after });
        }
        let body = response
            .text()
            .map_err(|e| PubMedError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(PubMedError::Http {
                status: status.as_u16(),
                body_excerpt: excerpt(&body),
            });
        }
        Ok(body)
    }
}

/// Parse an ESearch `retmode=json` body into a [`SearchOutcome`].
///
/// The numeric fields arrive as strings (`"count": "2500"`); both string
/// and number encodings are accepted. An `ERROR` field inside
/// `esearchresult`, or a top-level `error`, maps to [`PubMedError::Api`].
pub fn parse_esearch_response(body: &str) -> Result<SearchOutcome, PubMedError> {
    let value: serde_json::Value = serde_json::from_str(body)
        .map_err(|e| PubMedError::Api(format!("malformed response: {e}")))?;
    if let Some(err) = value.get("error").and_then(|v| v.as_str()) {
        return Err(PubMedError::Api(err.to_string()));
    }
    let result = value
        .get("esearchresult")
        .ok_or_else(|| PubMedError::Api("response has no esearchresult".into()))?;
    if let Some(err) = result.get("ERROR").and_then(|v| v.as_str()) {
        return Err(PubMedError::Api(err.to_string()));
    }
    let total_count = match result.get("count") {
        Some(serde_json::Value::String(s)) => s
            .parse::<u64>()
            .map_err(|_| PubMedError::Api(format!("unparseable count `{s}`")))?,
        Some(serde_json::Value::Number(n)) => n.as_u64().unwrap_or(0),
        _ => return Err(PubMedError::Api("response has no count".into())),
    };
    let ids = result
        .get("idlist")
        .and_then(|v| v.as_array())
        .map(|list| {
            list.iter()
                .filter_map(|v| v.as_str().map(str::to_string))
                .collect::<Vec<_>>()
        })
        .unwrap_or_default();
    Ok(SearchOutcome::new(ids, total_count))
}

fn excerpt(body: &str) -> String {
    const LIMIT: usize = 200;
    if body.len() <= LIMIT {
        body.to_string()
    } else {
        let mut end = LIMIT;
        while !body.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}…", &body[..end])
    }
}
