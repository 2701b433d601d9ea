//! Build a Boolean strategy by hand: OR-blocks per concept, ANDed across
//! concepts, then serialized to PubMed syntax.
//!
//! ```bash
//! cargo run -p strategist --example build_query
//! ```

use strategist::query::{build_concept_block, combine_concepts, FieldTag, QueryNode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // one block per concept; duplicates collapse case-insensitively
    let population = build_concept_block(
        &[
            "postmenopausal women".to_string(),
            "postmenopausal".to_string(),
            "Postmenopausal".to_string(), // dropped: duplicate spelling
            "menopause".to_string(),
        ],
        FieldTag::TitleAbstract,
    )?;
    let intervention = build_concept_block(
        &["vitamin D".to_string(), "cholecalciferol".to_string()],
        FieldTag::TitleAbstract,
    )?;

    let query = combine_concepts(vec![population, intervention])?;
    println!("strategy:   {query}");

    // a single-phrase concept stays a bare term
    let single = build_concept_block(&["metformin".to_string()], FieldTag::TitleAbstract)?;
    println!("single:     {single}");

    // normalization flattens nests and removes duplicate siblings
    let messy = QueryNode::And(vec![
        QueryNode::And(vec![
            QueryNode::term("aspirin", FieldTag::TitleAbstract)?,
            QueryNode::term("adults", FieldTag::TitleAbstract)?,
        ]),
        QueryNode::term("adults", FieldTag::TitleAbstract)?,
    ]);
    println!("messy:      {messy}");
    println!("normalized: {}", messy.normalize());

    // NOT subtracts its right side
    let not = QueryNode::not(
        QueryNode::term("coffee", FieldTag::TitleAbstract)?,
        QueryNode::term("decaffeinated", FieldTag::TitleAbstract)?,
    );
    println!("negation:   {not}");
    Ok(())
}
