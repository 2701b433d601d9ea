//! Execute a Boolean query against the bundled 200-document corpus using
//! the offline inverted index.
//!
//! ```bash
//! cargo run -p strategist --example offline_search
//! cargo run -p strategist --example offline_search -- 'sepsis[tiab] OR "poor sleep"[tiab]'
//! ```

use strategist::query::parse_pubmed;
use strategist::retrieval::{eval_query, load_corpus, CorpusIndex};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus_path =
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata/corpus.jsonl");
    let docs = load_corpus(&corpus_path)?;
    let index = CorpusIndex::build(&docs)?;
    println!(
        "indexed {} documents from {}",
        index.len(),
        corpus_path.display()
    );

    let query_text = std::env::args().nth(1).unwrap_or_else(|| {
        r#"("vitamin D"[tiab] OR cholecalciferol[tiab]) AND postmenopausal[tiab]"#.to_string()
    });
    let query = parse_pubmed(&query_text)?;
    println!("query: {query}\n");

    let hits = eval_query(&query, &index);
    println!("{} hit(s):", hits.len());
    for id in &hits {
        let doc = docs
            .iter()
            .find(|d| &d.doc_id == id)
            .expect("hit ids come from the corpus");
        println!("  {id}  ({})  {}", doc.year, doc.title);
    }
    Ok(())
}
