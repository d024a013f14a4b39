//! Pipeline configuration: TOML file, then environment, then flags.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

use sheetqa::answer::Variant;
use sheetqa::llm::EndpointConfig;
use sheetqa::vote::TieRule;

pub const ENV_ENDPOINT: &str = "SHEETQA_ENDPOINT";
pub const ENV_API_KEY: &str = "SHEETQA_API_KEY";
pub const ENV_MODEL: &str = "SHEETQA_MODEL";

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointSection {
    pub url: Option<String>,
    pub model: Option<String>,
    pub api_key: Option<String>,
    pub max_retries: usize,
    pub concurrency: usize,
    pub timeout_secs: u64,
    pub backoff_ms: u64,
}

impl Default for EndpointSection {
    fn default() -> Self {
        let d = EndpointConfig::default();
        EndpointSection {
            url: None,
            model: None,
            api_key: None,
            max_retries: d.max_retries,
            concurrency: d.concurrency,
            timeout_secs: d.timeout_secs,
            backoff_ms: d.backoff_ms,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceSection {
    pub n_formula: usize,
    pub n_dp: usize,
    pub temperature: f64,
    pub variant: Variant,
    pub tie_rule: TieRule,
}

impl Default for InferenceSection {
    fn default() -> Self {
        InferenceSection {
            n_formula: 5,
            n_dp: 5,
            temperature: 0.7,
            variant: Variant::Direct,
            tie_rule: TieRule::FormulaFirst,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerKind {
    Chars,
    Formula,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotationSection {
    pub n: usize,
    pub max_rounds: usize,
    pub max_attempts: usize,
    pub temperature: f64,
    pub tokenizer: TokenizerKind,
}

impl Default for AnnotationSection {
    fn default() -> Self {
        AnnotationSection { n: 10, max_rounds: 3, max_attempts: 3, temperature: 1.0, tokenizer: TokenizerKind::Chars }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableSection {
    /// Header rows for markdown and CSV tables without their own setting.
    pub header_rows: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub endpoint: EndpointSection,
    pub inference: InferenceSection,
    pub annotation: AnnotationSection,
    pub tables: TableSection,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<PipelineConfig> {
        let Some(path) = path else {
            return Ok(PipelineConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Endpoint settings with environment variables over the file.
    /// Command-line overrides are applied by the caller afterwards.
    pub fn endpoint(&self) -> EndpointConfig {
        let d = EndpointConfig::default();
        let env = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        EndpointConfig {
            url: env(ENV_ENDPOINT).or_else(|| self.endpoint.url.clone()).unwrap_or(d.url),
            api_key: env(ENV_API_KEY).or_else(|| self.endpoint.api_key.clone()),
            model: env(ENV_MODEL).or_else(|| self.endpoint.model.clone()).unwrap_or(d.model),
            max_retries: self.endpoint.max_retries,
            concurrency: self.endpoint.concurrency.max(1),
            timeout_secs: self.endpoint.timeout_secs,
            backoff_ms: self.endpoint.backoff_ms,
            seed: self.seed.unwrap_or(0),
        }
    }
}
