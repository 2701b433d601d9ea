//! Prompt templates with `{placeholder}` substitution.
//!
//! The built-in templates ship with the crate (see `prompts/`); a directory
//! of same-named `.txt` files overrides them per run, so prompt wording can
//! evolve without recompiling. Placeholders are replaced literally — text
//! substituted in is never re-scanned, so braces inside an abstract cannot
//! inject placeholders.

use std::collections::BTreeMap;
use std::path::Path;

/// Template names, one system/user pair per chained stage.
pub const TEMPLATE_NAMES: [&str; 10] = [
    "objective_system",
    "objective_user",
    "pico_system",
    "pico_user",
    "concepts_system",
    "concepts_user",
    "keywords_system",
    "keywords_user",
    "query_review_system",
    "query_review_user",
];

#[derive(Debug, Clone)]
pub struct PromptLibrary {
    templates: BTreeMap<String, String>,
}

impl Default for PromptLibrary {
    fn default() -> Self {
        Self::builtin()
    }
}

impl PromptLibrary {
    /// The templates compiled into the crate.
    pub fn builtin() -> Self {
        let mut templates = BTreeMap::new();
        templates.insert(
            "objective_system".to_string(),
            include_str!("../../prompts/objective_system.txt").to_string(),
        );
        templates.insert(
            "objective_user".to_string(),
            include_str!("../../prompts/objective_user.txt").to_string(),
        );
        templates.insert(
            "pico_system".to_string(),
            include_str!("../../prompts/pico_system.txt").to_string(),
        );
        templates.insert(
            "pico_user".to_string(),
            include_str!("../../prompts/pico_user.txt").to_string(),
        );
        templates.insert(
            "concepts_system".to_string(),
            include_str!("../../prompts/concepts_system.txt").to_string(),
        );
        templates.insert(
            "concepts_user".to_string(),
            include_str!("../../prompts/concepts_user.txt").to_string(),
        );
        templates.insert(
            "keywords_system".to_string(),
            include_str!("../../prompts/keywords_system.txt").to_string(),
        );
        templates.insert(
            "keywords_user".to_string(),
            include_str!("../../prompts/keywords_user.txt").to_string(),
        );
        templates.insert(
            "query_review_system".to_string(),
            include_str!("../../prompts/query_review_system.txt").to_string(),
        );
        templates.insert(
            "query_review_user".to_string(),
            include_str!("../../prompts/query_review_user.txt").to_string(),
        );
        PromptLibrary { templates }
    }

    /// Built-ins overridden by any `<name>.txt` files found in `dir`.
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let mut lib = Self::builtin();
        for name in TEMPLATE_NAMES {
            let path = dir.join(format!("{name}.txt"));
            if path.is_file() {
                lib.templates
                    .insert(name.to_string(), std::fs::read_to_string(path)?);
            }
        }
        Ok(lib)
    }

    /// Fill a template in a single left-to-right pass. Unknown template
    /// names panic (the name set is a compile-time constant); unmatched
    /// placeholders are left in place.
    pub fn render(&self, name: &str, substitutions: &[(&str, &str)]) -> String {
        let template = self
            .templates
            .get(name)
            .unwrap_or_else(|| panic!("unknown prompt template `{name}`"));
        let mut out = String::with_capacity(template.len());
        let mut rest = template.as_str();
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let after = &rest[open..];
            let close = after.find('}');
            let replacement = close.and_then(|end| {
                let key = &after[1..end];
                substitutions
                    .iter()
                    .find(|(k, _)| *k == key)
                    .map(|(_, v)| (end, *v))
            });
            match replacement {
                Some((end, value)) => {
                    out.push_str(value);
                    rest = &after[end + 1..];
                }
                None => {
                    out.push('{');
                    rest = &after[1..];
                }
            }
        }
        out.push_str(rest);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_covers_every_template_name() {
        let lib = PromptLibrary::builtin();
        for name in TEMPLATE_NAMES {
            assert!(!lib.render(name, &[]).is_empty(), "{name}");
        }
    }

    #[test]
    fn render_substitutes_placeholders() {
        let lib = PromptLibrary::builtin();
        let out = lib.render("objective_user", &[("title", "T"), ("abstract", "A")]);
        assert!(out.contains("Title: T"));
        assert!(out.contains("Abstract: A"));
        assert!(!out.contains("{title}"));
    }

    #[test]
    fn substituted_text_is_not_rescanned() {
        let lib = PromptLibrary::builtin();
        let out = lib.render("pico_user", &[("objective", "{objective}-literal")]);
        assert!(out.contains("{objective}-literal"));
    }

    #[test]
    fn dir_overrides_win() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("pico_user.txt"), "OVERRIDE {objective}").unwrap();
        let lib = PromptLibrary::from_dir(dir.path()).unwrap();
        assert_eq!(lib.render("pico_user", &[("objective", "x")]), "OVERRIDE x");
        // untouched templates still come from the builtins
        assert!(lib.render("pico_system", &[]).contains("PICO"));
    }
}
