//! The per-study term-set baseline: population and intervention terms are
//! ANDed within each study, ORed across studies, and the two sides are
//! ANDed into the final query. Retrieval equals the set-algebra expression
//! `(∪ₙ ∩ₘ docs(pₙₘ)) ∩ (∪ₙ ∩ₘ docs(iₙₘ))`.
//!
//! ```bash
//! cargo run -p strategist --example leads_baseline
//! ```

use strategist::query::{leads_synthesize, FieldTag, LeadsStudy, LeadsTermSets};
use strategist::retrieval::{eval_query, CorpusIndex, DocRecord};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sets = LeadsTermSets::new(vec![
        LeadsStudy {
            population_terms: vec!["postmenopausal".into(), "women".into()],
            intervention_terms: vec!["vitamin D".into()],
        },
        LeadsStudy {
            population_terms: vec!["elderly".into()],
            intervention_terms: vec!["cholecalciferol".into(), "calcium".into()],
        },
    ])?;

    let query = leads_synthesize(&sets, FieldTag::TitleAbstract);
    println!("synthesized: {query}\n");

    let docs = vec![
        doc("d1", "vitamin D in postmenopausal women"),
        doc("d2", "cholecalciferol with calcium in elderly patients"),
        doc("d3", "vitamin D in elderly men"), // population side: study 2 matches
        doc("d4", "postmenopausal women walking study"), // no intervention match
        doc("d5", "calcium supplements in athletes"), // no population match
    ];
    let index = CorpusIndex::build(&docs)?;
    let retrieved = eval_query(&query, &index);
    for doc in &docs {
        let mark = if retrieved.contains(&doc.doc_id) {
            "HIT "
        } else {
            "miss"
        };
        println!("{mark}  {}  {}", doc.doc_id, doc.title);
    }
    Ok(())
}

fn doc(id: &str, title: &str) -> DocRecord {
    DocRecord {
        doc_id: id.into(),
        title: title.into(),
        abstract_text: String::new(),
        year: 2015,
    }
}
