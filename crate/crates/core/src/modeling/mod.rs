//! Hashed n-gram features and a multinomial logistic-regression sentence
//! classifier trained by mini-batch gradient descent.

mod features;
mod io;
mod model;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{
    bucket, featurize, hash_ngram, ngram_counts, tokenize, FeatureVector, DEFAULT_DIM,
    TOKENIZER_VERSION,
};
pub use io::{load_model, model_from_bytes, model_to_bytes, save_model, MODEL_FORMAT_VERSION, MODEL_MAGIC};
pub use model::{
    data_gradient, loss, predict, predict_text, softmax, train, train_with_history, Gradient,
    ModelParams, Prediction, TrainMetadata,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("non-finite loss {loss} at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize, loss: f64 },
    #[error("feature dimension {features} does not match model dimension {model}")]
    DimensionMismatch { model: usize, features: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("model file version mismatch: {0}")]
    VersionMismatch(String),
    #[error("corrupt model file: {0}")]
    CorruptFile(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Hashing dimensionality.
    pub dim: usize,
    /// L2 penalty on the weights (not the bias); zero disables it.
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            learning_rate: 0.1,
            batch_size: 64,
            seed: 0,
            dim: DEFAULT_DIM,
            l2: 1e-5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.dim == 0 || self.dim > u32::MAX as usize {
            return bad("dim must be in 1..=2^32-1");
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0) {
            return bad("l2 must be non-negative");
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        TrainConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ModelError> {
        let cfg: TrainConfig =
            toml::from_str(s).map_err(|e| ModelError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}
