use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decode::{StrategyConfig, DEFAULT_MAX_TOKENS};
use crate::factcheck::CheckerConfig;
use crate::lm::SmoothingConfig;
use crate::textproc::DEFAULT_EVAL_SENTENCES;
use crate::{Error, Result};

/// How the language model is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub smoothing: SmoothingConfig,
    /// Load a saved model instead of training on the corpus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

fn default_order() -> usize {
    5
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            order: default_order(),
            smoothing: SmoothingConfig::default(),
            path: None,
        }
    }
}

/// Everything needed to run an experiment. Relative paths in a config file
/// are resolved against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// UTF-8 plain-text training corpus.
    pub corpus: PathBuf,
    /// Test prefixes (JSON lines).
    pub prefixes: PathBuf,
    /// Validation prefixes used by sweeps; falls back to `prefixes`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation_prefixes: Option<PathBuf>,
    /// Directory holding `facts.jsonl` and `documents.jsonl`.
    pub kb: PathBuf,
    #[serde(default)]
    pub model: ModelConfig,
    /// Strategies in `name[:key=value,...]` form.
    #[serde(default = "StrategyConfig::tuned_defaults", with = "strategy_strings")]
    pub strategies: Vec<StrategyConfig>,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    /// Sentences evaluated per generation.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Overrides every strategy's token budget.
    #[serde(default = "default_max_tokens")]
    pub max_tokens: usize,
    #[serde(default)]
    pub checker: CheckerConfig,
    #[serde(default)]
    pub global_seed: u64,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    pub output_dir: PathBuf,
}

fn default_seeds() -> usize {
    3
}

fn default_k() -> usize {
    DEFAULT_EVAL_SENTENCES
}

fn default_max_tokens() -> usize {
    DEFAULT_MAX_TOKENS
}

mod strategy_strings {
    use super::StrategyConfig;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[StrategyConfig], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(ToString::to_string))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<StrategyConfig>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

impl ExperimentConfig {
    /// A config with every optional field at its default.
    pub fn new(
        corpus: impl Into<PathBuf>,
        prefixes: impl Into<PathBuf>,
        kb: impl Into<PathBuf>,
        output_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            corpus: corpus.into(),
            prefixes: prefixes.into(),
            validation_prefixes: None,
            kb: kb.into(),
            model: ModelConfig::default(),
            strategies: StrategyConfig::tuned_defaults(),
            seeds: default_seeds(),
            k: default_k(),
            max_tokens: default_max_tokens(),
            checker: CheckerConfig::default(),
            global_seed: 0,
            workers: 0,
            output_dir: output_dir.into(),
        }
    }

    /// Reads a JSON config and resolves its relative paths.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.corpus);
        join(&mut self.prefixes);
        join(&mut self.kb);
        join(&mut self.output_dir);
        if let Some(p) = self.validation_prefixes.as_mut() {
            join(p);
        }
        if let Some(p) = self.model.path.as_mut() {
            join(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds < 1 {
            return Err(Error::Config("seeds must be >= 1".into()));
        }
        if self.k < 1 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if self.max_tokens < 1 {
            return Err(Error::Config("max_tokens must be >= 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("no strategies configured".into()));
        }
        self.checker.validate()
    }

    /// Strategies with the experiment's token budget applied.
    pub fn effective_strategies(&self) -> Vec<StrategyConfig> {
        self.strategies
            .iter()
            .map(|s| s.clone().with_max_tokens(self.max_tokens))
            .collect()
    }

    pub fn facts_path(&self) -> PathBuf {
        self.kb.join("facts.jsonl")
    }

    pub fn documents_path(&self) -> PathBuf {
        self.kb.join("documents.jsonl")
    }
}

/// Report names for `strategies`: the short label, or the full spec when
/// two entries share a label. Exact duplicates get a `#index` suffix.
pub fn strategy_names(strategies: &[StrategyConfig]) -> Vec<String> {
    let labels: Vec<String> = strategies.iter().map(StrategyConfig::label).collect();
    let specs: Vec<String> = strategies.iter().map(StrategyConfig::to_string).collect();
    let count = |xs: &[String], x: &String| xs.iter().filter(|y| *y == x).count();
    labels
        .iter()
        .zip(&specs)
        .enumerate()
        .map(|(i, (l, s))| {
            if count(&labels, l) == 1 {
                l.clone()
            } else if count(&specs, s) == 1 {
                s.clone()
            } else {
                format!("{s}#{i}")
            }
        })
        .collect()
}
