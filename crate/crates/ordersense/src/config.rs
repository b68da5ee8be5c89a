//! Experiment configuration: one TOML file per experiment, every seed
//! explicit, validated before any model call. The parsed config is
//! serialized into each report bundle and its digest stamps every artifact.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{LoadSpec, TaskKind};
use crate::gateway::{EndpointConfig, PlantedMockConfig};
use crate::ordersearch::SelectionScope;
use crate::prompting::PromptTemplate;
use crate::scoring::{ScorerKind, DEFAULT_RELATIVE_TOLERANCE};
use crate::sensitivity::StdMode;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: CorpusSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub demos: DemoSection,
    #[serde(default)]
    pub perms: PermSection,
    pub model: ModelSection,
    #[serde(default)]
    pub scorer: ScorerSection,
    #[serde(default)]
    pub template: TemplateSection,
    #[serde(default)]
    pub stats: StatsSection,
    #[serde(default)]
    pub search: SearchSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSection {
    pub path: PathBuf,
    pub task_kind: TaskKind,
    /// Dataset name in reports; defaults to the corpus file stem.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub id_field: Option<String>,
    #[serde(default)]
    pub text_field: Option<String>,
    #[serde(default)]
    pub label_field: Option<String>,
    #[serde(default)]
    pub answer_field: Option<String>,
}

impl CorpusSection {
    pub fn load_spec(&self) -> LoadSpec {
        let defaults = LoadSpec::default();
        LoadSpec {
            id_field: self.id_field.clone().unwrap_or(defaults.id_field),
            text_field: self.text_field.clone().unwrap_or(defaults.text_field),
            label_field: self.label_field.clone().unwrap_or(defaults.label_field),
            answer_field: self.answer_field.clone().unwrap_or(defaults.answer_field),
        }
    }

    pub fn dataset_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "corpus".into())
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    #[serde(default = "default_n_dev")]
    pub n_dev: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_n_dev() -> usize {
    1000
}
fn default_n_test() -> usize {
    500
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            n_dev: default_n_dev(),
            n_test: default_n_test(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoSection {
    #[serde(default = "default_m")]
    pub m: usize,
    /// Shots per prompt; defaults to 2*|labels| for classification and 8 for
    /// generation.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn default_m() -> usize {
    10
}

impl Default for DemoSection {
    fn default() -> Self {
        DemoSection {
            m: default_m(),
            k: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PermSection {
    /// Defaults to 10 for sensitivity runs and 128 for order search.
    #[serde(default)]
    pub p: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub include_identity: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Endpoint,
    Mock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    #[serde(default)]
    pub endpoint: Option<EndpointConfig>,
    #[serde(default)]
    pub mock: Option<PlantedMockConfig>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerSection {
    /// Defaults to label matching for classification and exact matching for
    /// generation.
    #[serde(default)]
    pub kind: Option<ScorerKind>,
    #[serde(default = "default_tolerance")]
    pub relative_tolerance: Option<f64>,
}

fn default_tolerance() -> Option<f64> {
    Some(DEFAULT_RELATIVE_TOLERANCE)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateSection {
    #[serde(default)]
    pub demo_block: Option<String>,
    #[serde(default)]
    pub query_block: Option<String>,
    #[serde(default)]
    pub separator: Option<String>,
    #[serde(default)]
    pub system_preamble: Option<String>,
}

impl TemplateSection {
    pub fn resolve(&self, task_kind: TaskKind) -> PromptTemplate {
        let defaults = PromptTemplate::defaults_for(task_kind);
        PromptTemplate {
            demo_block: self.demo_block.clone().unwrap_or(defaults.demo_block),
            query_block: self.query_block.clone().unwrap_or(defaults.query_block),
            separator: self.separator.clone().unwrap_or(defaults.separator),
            system_preamble: self.system_preamble.clone().or(defaults.system_preamble),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsSection {
    #[serde(default)]
    pub std: StdMode,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    #[serde(default)]
    pub selection_scope: SelectionScope,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Completion cache location; defaults to `<dir>/cache`.
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
}

impl OutputSection {
    pub fn cache_file(&self) -> PathBuf {
        self.cache_dir
            .clone()
            .unwrap_or_else(|| self.dir.join("cache"))
            .join("completions.jsonl")
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let config: ExperimentConfig = toml::from_str(&raw).map_err(|e| ConfigError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    config.validate()?;
    Ok(config)
}

impl ExperimentConfig {
    /// Structural validation; runs before any corpus or model access.
    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.model.kind {
            ModelKind::Endpoint => {
                let endpoint = self.model.endpoint.as_ref().ok_or_else(|| {
                    ConfigError::Invalid(
                        "model.kind = \"endpoint\" needs a [model.endpoint] table".into(),
                    )
                })?;
                endpoint
                    .validate()
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            }
            ModelKind::Mock => {
                let mock = self.model.mock.as_ref().ok_or_else(|| {
                    ConfigError::Invalid("model.kind = \"mock\" needs a [model.mock] table".into())
                })?;
                mock.validate()
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            }
        }

        match (self.corpus.task_kind, self.scorer.kind) {
            (TaskKind::Classification, Some(kind)) if kind != ScorerKind::LabelMatch => {
                return Err(ConfigError::Invalid(
                    "classification tasks are graded with the label_match scorer".into(),
                ));
            }
            _ => {}
        }
        if let Some(tolerance) = self.scorer.relative_tolerance {
            if tolerance <= 0.0 {
                return Err(ConfigError::Invalid(format!(
                    "scorer.relative_tolerance must be positive, got {tolerance}"
                )));
            }
        }

        self.template
            .resolve(self.corpus.task_kind)
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;

        if self.demos.m == 0 {
            return Err(ConfigError::Invalid("demos.m must be at least 1".into()));
        }
        if let Some(p) = self.perms.p {
            if p == 0 {
                return Err(ConfigError::Invalid("perms.p must be at least 1".into()));
            }
        }
        Ok(())
    }

    /// Shots per prompt, honoring the classification k = 2*|labels| rule.
    pub fn resolve_k(&self, label_count: usize) -> Result<usize, ConfigError> {
        match (self.corpus.task_kind, self.demos.k) {
            (TaskKind::Classification, Some(k)) => {
                if k != 2 * label_count {
                    return Err(ConfigError::Invalid(format!(
                        "classification uses k = 2*|labels| = {}, config says k = {k}",
                        2 * label_count
                    )));
                }
                Ok(k)
            }
            (TaskKind::Classification, None) => Ok(2 * label_count),
            (TaskKind::Generation, Some(k)) => Ok(k),
            (TaskKind::Generation, None) => Ok(8),
        }
    }

    pub fn resolve_p(&self, command_default: usize) -> usize {
        self.perms.p.unwrap_or(command_default)
    }

    /// Canonical JSON form and its SHA-256 digest; the digest stamps every
    /// artifact the experiment emits.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}
