use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::corpus::{SplitMode, SplitSpec};
use crate::modeling::TrainConfig;
use crate::segmenter::SegmentationConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSettings {
    pub input_dir: PathBuf,
    pub work_dir: PathBuf,
    /// Annotation export directory; `<work_dir>/annotations` when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub export_dir: Option<PathBuf>,
}

impl Default for PathSettings {
    fn default() -> Self {
        PathSettings {
            input_dir: PathBuf::from("resumes"),
            work_dir: PathBuf::from("work"),
            export_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSettings {
    /// Used unless `sizes` is set.
    pub ratios: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<[usize; 3]>,
    pub stratified: bool,
    /// Independent training runs averaged by `eval` and `ablate`.
    pub runs: usize,
}

impl Default for SplitSettings {
    fn default() -> Self {
        SplitSettings {
            ratios: SplitSpec::DEFAULT_RATIOS,
            sizes: None,
            stratified: false,
            runs: 3,
        }
    }
}

impl SplitSettings {
    pub fn spec(&self) -> SplitSpec {
        match self.sizes {
            Some(s) => SplitSpec::Sizes(s),
            None => SplitSpec::Ratios(self.ratios),
        }
    }

    pub fn mode(&self) -> SplitMode {
        if self.stratified {
            SplitMode::Stratified
        } else {
            SplitMode::Unstratified
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerSettings {
    pub listen: String,
    pub lease_secs: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ui_dir: Option<PathBuf>,
}

impl Default for ServerSettings {
    fn default() -> Self {
        ServerSettings {
            listen: "127.0.0.1:8080".into(),
            lease_secs: 30 * 60,
            ui_dir: None,
        }
    }
}

/// Everything a pipeline run reads from its config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Base seed for splitting and training; overrides `train.seed`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub paths: PathSettings,
    pub segmentation: SegmentationConfig,
    pub train: TrainConfig,
    pub split: SplitSettings,
    pub server: ServerSettings,
}

const SEGMENTATION_KEYS: &[&str] = &["abbreviations", "min_chars", "punctuation", "bullets"];
const TRAIN_KEYS: &[&str] = &["epochs", "learning_rate", "batch_size", "dim", "l2"];

impl PipelineConfig {
    /// Parses a pipeline config. A file holding only segmentation or only
    /// training keys at top level is accepted as that section alone, so
    /// `segment --config seg.toml` and `train --config train.toml` work with
    /// bare section files.
    pub fn from_toml_str(s: &str) -> Result<Self, CliError> {
        let bad = |e: toml::de::Error| CliError::config(e.to_string().replace('\n', " "));
        let table: toml::Table = s.parse().map_err(bad)?;
        let has = |keys: &[&str]| table.keys().any(|k| keys.contains(&k.as_str()));
        let cfg = if has(SEGMENTATION_KEYS) {
            PipelineConfig {
                segmentation: toml::from_str(s).map_err(bad)?,
                ..Default::default()
            }
        } else if has(TRAIN_KEYS) {
            let train: TrainConfig = toml::from_str(s).map_err(bad)?;
            PipelineConfig {
                seed: Some(train.seed),
                train,
                ..Default::default()
            }
        } else {
            toml::from_str(s).map_err(bad)?
        };
        cfg.train
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| CliError::config(format!("{}: {}", path.display(), e.message)))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// The seed every stage uses: the explicit pipeline seed, else the
    /// training seed.
    pub fn effective_seed(&self) -> u64 {
        self.seed.unwrap_or(self.train.seed)
    }

    pub fn train_config(&self) -> TrainConfig {
        self.train.with_seed(self.effective_seed())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let mut cfg = PipelineConfig {
            seed: Some(7),
            ..Default::default()
        };
        cfg.split.sizes = Some([58_000, 10_000, 10_000]);
        cfg.train.epochs = 9;
        cfg.server.ui_dir = Some("ui/dist".into());
        let back = PipelineConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(
            PipelineConfig::from_toml_str(&PipelineConfig::default().to_toml_string()).unwrap(),
            PipelineConfig::default()
        );
    }

    #[test]
    fn bare_sections() {
        let c = PipelineConfig::from_toml_str("min_chars = 5\n").unwrap();
        assert_eq!(c.segmentation.min_chars, 5);
        let c = PipelineConfig::from_toml_str("epochs = 2\nseed = 4\n").unwrap();
        assert_eq!(c.train.epochs, 2);
        assert_eq!(c.effective_seed(), 4);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(PipelineConfig::from_toml_str("[paths]\nbogus = 1\n").is_err());
        assert!(PipelineConfig::from_toml_str("epochs = 0\n").is_err());
    }
}
