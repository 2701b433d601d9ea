//! Live PubMed ESearch: send a serialized strategy to the E-utilities
//! endpoint and print the returned PMIDs and total hit count.
//!
//! Needs outbound network access; set `PUBMED_API_KEY` to raise the
//! request budget from 3/s to 10/s. Without network the example explains
//! the failure and exits cleanly.
//!
//! ```bash
//! cargo run -p strategist --example pubmed_search
//! cargo run -p strategist --example pubmed_search -- 'metformin[tiab] AND "type 2 diabetes"[tiab]'
//! ```

use strategist::query::parse_pubmed;
use strategist::retrieval::{PubMedClient, PubMedConfig, SearchLimits};

fn main() {
    let query_text = std::env::args().nth(1).unwrap_or_else(|| {
        r#""vitamin D"[tiab] AND postmenopausal[tiab] AND fracture[tiab]"#.to_string()
    });
    // validate locally before spending a network call
    let query = match parse_pubmed(&query_text) {
        Ok(q) => q,
        Err(e) => {
            eprintln!("query does not parse: {e}");
            std::process::exit(2);
        }
    };
    println!("query: {query}");

    let config = PubMedConfig::default();
    println!(
        "request budget: {}/s ({} API key)\n",
        config.effective_rps(),
        if config.api_key.is_some() {
            "with"
        } else {
            "no"
        }
    );
    let client = PubMedClient::new(config);
    let limits = SearchLimits {
        retmax: 20,
        date_floor: None,
        date_ceiling: Some(2016),
    };

    match client.esearch(&query_text, &limits) {
        Ok(outcome) => {
            println!("total matches: {}", outcome.total_count);
            println!("truncated: {}", outcome.truncated);
            for pmid in &outcome.ids {
                println!("  PMID {pmid}");
            }
        }
        Err(e) => {
            eprintln!("search failed: {e}");
            eprintln!("(this example needs outbound network access to eutils.ncbi.nlm.nih.gov)");
            std::process::exit(4);
        }
    }
}
