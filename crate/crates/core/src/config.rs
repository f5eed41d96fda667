//! Pipeline configuration, read from TOML. Every key is optional and unknown
//! keys are rejected.

use crate::compose::ComposeConfig;
use crate::placement::PlacementConfig;
use crate::script::{NarrationDirectives, SentenceSplitter};
use crate::sim::SimConfig;
use crate::timeline::AlignConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

const DEFAULT_RATE: f64 = 5.0;
const DEFAULT_VARIANTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpeechConfig {
    /// Speaking rate of the stub synthesizer.
    pub rate_chars_per_sec: f64,
}

impl Default for SpeechConfig {
    fn default() -> Self {
        Self {
            rate_chars_per_sec: DEFAULT_RATE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScriptConfig {
    /// How many narration variants to request.
    pub variants: usize,
    pub splitter: SentenceSplitter,
    pub directives: NarrationDirectives,
}

impl Default for ScriptConfig {
    fn default() -> Self {
        Self {
            variants: DEFAULT_VARIANTS,
            splitter: SentenceSplitter::default(),
            directives: NarrationDirectives::default(),
        }
    }
}

/// `"stub"` or an HTTP endpoint URL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClientsConfig {
    pub text_gen: String,
    pub speech: String,
    /// Request timeout for HTTP clients, seconds.
    pub timeout_secs: u64,
}

impl Default for ClientsConfig {
    fn default() -> Self {
        Self {
            text_gen: "stub".into(),
            speech: "stub".into(),
            timeout_secs: 60,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub speech: SpeechConfig,
    pub script: ScriptConfig,
    pub compose: ComposeConfig,
    pub align: AlignConfig,
    pub placement: PlacementConfig,
    pub sim: SimConfig,
    pub clients: ClientsConfig,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let r = self.speech.rate_chars_per_sec;
        if !(r > 0.0 && r.is_finite()) {
            return Err(ConfigError::Invalid("speech.rate_chars_per_sec must be positive".into()));
        }
        if self.script.variants == 0 {
            return Err(ConfigError::Invalid("script.variants must be at least 1".into()));
        }
        if self.script.splitter.terminators.is_empty() {
            return Err(ConfigError::Invalid("script.splitter.terminators must not be empty".into()));
        }
        let [lo, hi] = self.script.directives.target_minutes_per_device;
        if !(lo >= 0.0 && lo <= hi) {
            return Err(ConfigError::Invalid(
                "script.directives.target_minutes_per_device must be [low, high]".into(),
            ));
        }
        self.placement.validate().map_err(ConfigError::Invalid)?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
