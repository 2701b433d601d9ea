//! Query execution: an offline inverted-index engine that serves as the
//! deterministic oracle, and an online PubMed ESearch client, both
//! returning document identifier sets.

mod index;
mod pubmed;
mod rate_limit;

pub use index::{eval_query, load_corpus, tokenize, CorpusIndex, DocRecord, IndexError};
pub use pubmed::{
    parse_esearch_response, PubMedClient, PubMedConfig, PubMedError, SearchLimits, SearchOutcome,
    EUTILS_BASE_URL, MAX_RETMAX, RPS_WITHOUT_KEY, RPS_WITH_KEY,
};
pub use rate_limit::RateLimiter;
