//! Parse PubMed-syntax queries: operator precedence, normalization, and
//! error reporting with byte offsets.
//!
//! ```bash
//! cargo run -p strategist --example parse_query
//! ```

use strategist::query::{parse_pubmed, serialize_pubmed};

fn main() {
    let inputs = [
        // AND binds tighter than OR
        r#"aspirin[tiab] OR clopidogrel[tiab] AND "myocardial infarction"[tiab]"#,
        // explicit grouping overrides precedence
        r#"(aspirin[tiab] OR clopidogrel[tiab]) AND "myocardial infarction"[tiab]"#,
        // NOT binds tightest and is left-associative
        r#"statins[tiab] NOT simvastatin[tiab] AND elderly[tiab]"#,
        // left-leaning chains come back as one flat node
        r#"a[tiab] AND b[tiab] AND c[tiab] AND d[tiab]"#,
        // untagged terms default to [all]
        r#"metformin"#,
    ];
    for input in inputs {
        let parsed = parse_pubmed(input).expect("demo inputs are valid");
        println!("input:      {input}");
        println!("normalized: {}\n", serialize_pubmed(&parsed));
    }

    // syntax errors carry the byte offset and the acceptable tokens
    for bad in [
        r#"(aspirin[tiab] OR "#,
        r#"aspirin[xx]"#,
        r#"AND aspirin[tiab]"#,
    ] {
        let err = parse_pubmed(bad).expect_err("demo inputs are invalid");
        println!("input:      {bad}");
        println!("error:      {err}\n");
    }
}
