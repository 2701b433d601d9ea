//! Run configuration with flags > environment > config-file precedence.
//!
//! The config file is a single TOML document (`strategist.toml` in the
//! working directory, or an explicit `--config` path). Environment
//! variables: `LLM_API_KEY`, `LLM_BASE_URL`, `LLM_MODEL`,
//! `PUBMED_API_KEY`. Command-line flags are applied by the binary on top
//! of the loaded config.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::llm::Mode;
use crate::query::FieldTag;

pub const DEFAULT_LLM_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_LLM_MODEL: &str = "gpt-4o-mini";
pub const DEFAULT_FIXTURES_DIR: &str = "fixtures/llm";
pub const DEFAULT_OUTPUT_DIR: &str = "runs";
pub const CONFIG_FILE_NAME: &str = "strategist.toml";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {0}: {1}")]
    Parse(PathBuf, String),
    #[error("config file {0} not found")]
    NotFound(PathBuf),
    #[error("invalid config value: {0}")]
    Invalid(String),
}

/// Effective run configuration after file and environment resolution.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub llm_base_url: String,
    pub llm_api_key: Option<String>,
    pub llm_model: String,
    pub max_attempts: u32,
    pub pubmed_api_key: Option<String>,
    pub pubmed_rps: Option<f64>,
    pub default_tag: FieldTag,
    pub mode: Mode,
    pub fixtures_dir: PathBuf,
    pub prompts_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            llm_base_url: DEFAULT_LLM_BASE_URL.into(),
            llm_api_key: None,
            llm_model: DEFAULT_LLM_MODEL.into(),
            max_attempts: crate::llm::DEFAULT_MAX_ATTEMPTS,
            pubmed_api_key: None,
            pubmed_rps: None,
            default_tag: FieldTag::TitleAbstract,
            mode: Mode::Replay,
            fixtures_dir: DEFAULT_FIXTURES_DIR.into(),
            prompts_dir: None,
            output_dir: DEFAULT_OUTPUT_DIR.into(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    llm: LlmSection,
    #[serde(default)]
    pubmed: PubMedSection,
    #[serde(default)]
    defaults: DefaultsSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LlmSection {
    base_url: Option<String>,
    api_key: Option<String>,
    model: Option<String>,
    max_attempts: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PubMedSection {
    api_key: Option<String>,
    requests_per_second: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DefaultsSection {
    tag: Option<String>,
    mode: Option<String>,
    fixtures_dir: Option<PathBuf>,
    prompts_dir: Option<PathBuf>,
    output_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults, overlaid with the config file (when present), overlaid
    /// with the environment. An explicitly named config file must exist;
    /// the implicit `strategist.toml` is optional.
    pub fn load(explicit_path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = RunConfig::default();
        let path = match explicit_path {
            Some(path) => {
                if !path.is_file() {
                    return Err(ConfigError::NotFound(path.to_path_buf()));
                }
                Some(path.to_path_buf())
            }
            None => {
                let implicit = PathBuf::from(CONFIG_FILE_NAME);
                implicit.is_file().then_some(implicit)
            }
        };
        if let Some(path) = path {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| ConfigError::Parse(path.clone(), e.to_string()))?;
            let file: FileConfig = toml::from_str(&text)
                .map_err(|e| ConfigError::Parse(path.clone(), e.to_string()))?;
            config.apply_file(file)?;
        }
        config.apply_env();
        Ok(config)
    }

    fn apply_file(&mut self, file: FileConfig) -> Result<(), ConfigError> {
        if let Some(v) = file.llm.base_url {
            self.llm_base_url = v;
        }
        if let Some(v) = file.llm.api_key {
            self.llm_api_key = Some(v);
        }
        if let Some(v) = file.llm.model {
            self.llm_model = v;
        }
        if let Some(v) = file.llm.max_attempts {
            self.max_attempts = v.max(1);
        }
        if let Some(v) = file.pubmed.api_key {
            self.pubmed_api_key = Some(v);
        }
        if let Some(v) = file.pubmed.requests_per_second {
            if v <= 0.0 {
                return Err(ConfigError::Invalid(format!(
                    "requests_per_second must be positive, got {v}"
                )));
            }
            self.pubmed_rps = Some(v);
        }
        if let Some(v) = file.defaults.tag {
            self.default_tag = v
                .parse()
                .map_err(|_| ConfigError::Invalid(format!("unknown field tag `{v}`")))?;
        }
        if let Some(v) = file.defaults.mode {
            self.mode = v.parse().map_err(ConfigError::Invalid)?;
        }
        if let Some(v) = file.defaults.fixtures_dir {
            self.fixtures_dir = v;
        }
        if let Some(v) = file.defaults.prompts_dir {
            self.prompts_dir = Some(v);
        }
        if let Some(v) = file.defaults.output_dir {
            self.output_dir = v;
        }
        Ok(())
    }

    fn apply_env(&mut self) {
        let nonempty = |name: &str| std::env::var(name).ok().filter(|v| !v.is_empty());
        if let Some(v) = nonempty("LLM_BASE_URL") {
            self.llm_base_url = v;
        }
        if let Some(v) = nonempty("LLM_API_KEY") {
            self.llm_api_key = Some(v);
        }
        if let Some(v) = nonempty("LLM_MODEL") {
            self.llm_model = v;
        }
        if let Some(v) = nonempty("PUBMED_API_KEY") {
            self.pubmed_api_key = Some(v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_replay_and_tiab() {
        let config = RunConfig::default();
        assert_eq!(config.mode, Mode::Replay);
        assert_eq!(config.default_tag, FieldTag::TitleAbstract);
        assert_eq!(config.max_attempts, 3);
    }

    #[test]
    fn file_values_overlay_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("strategist.toml");
        std::fs::write(
            &path,
            r#"
[llm]
model = "other-model"
max_attempts = 5

[pubmed]
requests_per_second = 2.5

[defaults]
tag = "tw"
mode = "record"
fixtures_dir = "fx"
"#,
        )
        .unwrap();
        let config = RunConfig::load(Some(&path)).unwrap();
        assert_eq!(config.llm_model, "other-model");
        assert_eq!(config.max_attempts, 5);
        assert_eq!(config.pubmed_rps, Some(2.5));
        assert_eq!(config.default_tag, FieldTag::TextWord);
        assert_eq!(config.mode, Mode::Record);
        assert_eq!(config.fixtures_dir, PathBuf::from("fx"));
        // untouched values keep their defaults
        assert_eq!(config.llm_base_url, DEFAULT_LLM_BASE_URL);
    }

    #[test]
    fn explicit_missing_file_is_an_error() {
        let err = RunConfig::load(Some(Path::new("/nonexistent/strategist.toml"))).unwrap_err();
        assert!(matches!(err, ConfigError::NotFound(_)));
    }

    #[test]
    fn bad_values_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("strategist.toml");
        std::fs::write(&path, "[defaults]\ntag = \"xx\"\n").unwrap();
        assert!(RunConfig::load(Some(&path)).is_err());
        std::fs::write(&path, "[pubmed]\nrequests_per_second = 0.0\n").unwrap();
        assert!(RunConfig::load(Some(&path)).is_err());
        std::fs::write(&path, "[unknown]\nx = 1\n").unwrap();
        assert!(RunConfig::load(Some(&path)).is_err());
    }
}
