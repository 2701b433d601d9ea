//! Deterministic PubMed-syntax rendering of a [`QueryNode`].

use super::{FieldTag, QueryNode};

/// Render a query in PubMed syntax.
///
/// Grammar produced:
/// - terms are `phrase[tag]`, with the phrase double-quoted iff it contains
///   whitespace;
/// - every AND / OR / NOT node is parenthesized, the root included;
/// - operators are upper-case, NOT is rendered as `(positive NOT negative)`.
///
/// Output is byte-identical for structurally equal inputs.
pub fn serialize_pubmed(query: &QueryNode) -> String {
    let mut out = String::new();
    write_node(query, &mut out);
    out
}

fn write_node(node: &QueryNode, out: &mut String) {
    match node {
        QueryNode::Term { phrase, tag } => write_term(phrase, *tag, out),
        QueryNode::And(children) => write_nary(children, " AND ", out),
        QueryNode::Or(children) => write_nary(children, " OR ", out),
        QueryNode::Not { positive, negative } => {
            out.push('(');
            write_node(positive, out);
            out.push_str(" NOT ");
            write_node(negative, out);
            out.push(')');
        }
    }
}

fn write_nary(children: &[QueryNode], op: &str, out: &mut String) {
    // a lone child (invalid tree from deserialization) still renders sanely
    if children.len() == 1 {
        write_node(&children[0], out);
        return;
    }
    out.push('(');
    for (i, child) in children.iter().enumerate() {
        if i > 0 {
            out.push_str(op);
        }
        write_node(child, out);
    }
    out.push(')');
}

fn write_term(phrase: &str, tag: FieldTag, out: &mut String) {
    if phrase.chars().any(char::is_whitespace) {
        out.push('"');
        out.push_str(phrase);
        out.push('"');
    } else {
        out.push_str(phrase);
    }
    out.push_str(tag.token());
}
