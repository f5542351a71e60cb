use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embed::ProviderConfig;
use crate::error::{Error, Result};
use crate::ingest::{ExportSpec, IngestConfig};
use crate::labels::Outcome;
use crate::model::{ModelKind, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    Riskword,
    Riskcat,
    Dict,
    Gpt,
    GptRiskm,
    GptRiskw,
    DailyEmbed,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 7] = [
        FeatureGroup::Riskword,
        FeatureGroup::Riskcat,
        FeatureGroup::Dict,
        FeatureGroup::Gpt,
        FeatureGroup::GptRiskm,
        FeatureGroup::GptRiskw,
        FeatureGroup::DailyEmbed,
    ];

    /// Column prefix in feature matrices.
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::Riskword => "riskword",
            FeatureGroup::Riskcat => "riskcat",
            FeatureGroup::Dict => "dict",
            FeatureGroup::Gpt => "gpt",
            FeatureGroup::GptRiskm => "gpt_riskm",
            FeatureGroup::GptRiskw => "gpt_riskw",
            FeatureGroup::DailyEmbed => "daily_embed",
        }
    }

    pub fn uses_embeddings(self) -> bool {
        matches!(
            self,
            FeatureGroup::Gpt | FeatureGroup::GptRiskm | FeatureGroup::GptRiskw | FeatureGroup::DailyEmbed
        )
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown feature group `{s}`")))
    }
}

fn default_cache_dir() -> PathBuf {
    PathBuf::from("cache")
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_features() -> Vec<FeatureGroup> {
    FeatureGroup::ALL.to_vec()
}
fn default_labels() -> Vec<Outcome> {
    Outcome::ALL.to_vec()
}
fn default_models() -> Vec<ModelSpec> {
    ModelKind::ALL.into_iter().map(ModelSpec::new).collect()
}
fn default_correlation_threshold() -> f64 {
    0.2
}
fn default_ttest_alpha() -> f64 {
    0.05
}

/// Everything a pipeline run reads. Relative paths are resolved against the
/// directory of the config file by [`PipelineConfig::load`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Directory scanned for `<app>[_...].<csv|json|html>` exports.
    #[serde(default)]
    pub exports_dir: Option<PathBuf>,
    /// Explicit exports, read in addition to `exports_dir`.
    #[serde(default)]
    pub exports: Vec<ExportSpec>,
    pub survey: PathBuf,
    pub lexicon: PathBuf,
    #[serde(default)]
    pub dictionary: Option<PathBuf>,
    #[serde(default = "default_cache_dir")]
    pub cache_dir: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub ingest: IngestConfig,
    #[serde(default)]
    pub provider: ProviderConfig,
    #[serde(default = "default_features")]
    pub features: Vec<FeatureGroup>,
    #[serde(default = "default_labels")]
    pub labels: Vec<Outcome>,
    #[serde(default = "default_models")]
    pub models: Vec<ModelSpec>,
    #[serde(default = "default_correlation_threshold")]
    pub correlation_threshold: f64,
    #[serde(default = "default_ttest_alpha")]
    pub ttest_alpha: f64,
    #[serde(default)]
    pub seed: u64,
}

impl PipelineConfig {
    /// Config with defaults for everything but the input paths.
    pub fn new(exports_dir: PathBuf, survey: PathBuf, lexicon: PathBuf, dictionary: Option<PathBuf>) -> Self {
        PipelineConfig {
            exports_dir: Some(exports_dir),
            exports: Vec::new(),
            survey,
            lexicon,
            dictionary,
            cache_dir: default_cache_dir(),
            output_dir: default_output_dir(),
            ingest: IngestConfig::default(),
            provider: ProviderConfig::default(),
            features: default_features(),
            labels: default_labels(),
            models: default_models(),
            correlation_threshold: default_correlation_threshold(),
            ttest_alpha: default_ttest_alpha(),
            seed: 0,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig =
            serde_json::from_str(&raw).map_err(|e| Error::format(path, e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = &mut self.exports_dir {
            fix(d);
        }
        for e in &mut self.exports {
            fix(&mut e.path);
        }
        fix(&mut self.survey);
        fix(&mut self.lexicon);
        if let Some(d) = &mut self.dictionary {
            fix(d);
        }
        fix(&mut self.cache_dir);
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Config("at least one feature group must be enabled".into()));
        }
        if self.labels.is_empty() {
            return Err(Error::Config("at least one label must be enabled".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("at least one model must be configured".into()));
        }
        if self.exports_dir.is_none() && self.exports.is_empty() {
            return Err(Error::Config("no exports_dir or exports given".into()));
        }
        if self.features.contains(&FeatureGroup::Dict) && self.dictionary.is_none() {
            return Err(Error::Config("feature group `dict` needs a dictionary path".into()));
        }
        if !(self.correlation_threshold >= 0.0 && self.correlation_threshold < 1.0) {
            return Err(Error::Config("correlation_threshold must be in [0, 1)".into()));
        }
        if !(self.ttest_alpha > 0.0 && self.ttest_alpha < 1.0) {
            return Err(Error::Config("ttest_alpha must be in (0, 1)".into()));
        }
        self.ingest.validate()?;
        self.provider.validate()?;
        for m in &self.models {
            m.validate()?;
        }
        Ok(())
    }

    /// Enabled groups in canonical order, without repeats.
    pub fn feature_groups(&self) -> Vec<FeatureGroup> {
        FeatureGroup::ALL
            .into_iter()
            .filter(|g| self.features.contains(g))
            .collect()
    }

    pub fn enabled_labels(&self) -> Vec<Outcome> {
        Outcome::ALL
            .into_iter()
            .filter(|o| self.labels.contains(o))
            .collect()
    }
}
