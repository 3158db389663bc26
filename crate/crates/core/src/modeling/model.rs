use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{featurize, FeatureVector, TOKENIZER_VERSION};
use super::{ModelError, TrainConfig};
use crate::corpus::Label;

const K: usize = Label::COUNT;

/// Below this the lazily applied weight decay is folded back into the weights.
const MIN_SCALE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMetadata {
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2: f64,
    pub dim: usize,
    pub tokenizer_version: u32,
    pub train_examples: usize,
    /// False if the model was produced by a non-deterministic training mode.
    pub deterministic: bool,
}

impl TrainMetadata {
    pub fn from_config(cfg: &TrainConfig, train_examples: usize) -> Self {
        TrainMetadata {
            seed: cfg.seed,
            epochs: cfg.epochs,
            learning_rate: cfg.learning_rate,
            batch_size: cfg.batch_size,
            l2: cfg.l2,
            dim: cfg.dim,
            tokenizer_version: TOKENIZER_VERSION,
            train_examples,
            deterministic: true,
        }
    }
}

/// Linear softmax classifier over hashed features.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub dim: usize,
    /// Feature-major: the weight of class `k` for bucket `j` is `weights[j * 7 + k]`.
    pub weights: Vec<f64>,
    pub bias: [f64; K],
    pub meta: TrainMetadata,
}

impl ModelParams {
    pub fn zeros(cfg: &TrainConfig) -> Self {
        ModelParams {
            dim: cfg.dim,
            weights: vec![0.0; cfg.dim * K],
            bias: [0.0; K],
            meta: TrainMetadata::from_config(cfg, 0),
        }
    }

    pub fn weight(&self, bucket: usize, label: Label) -> f64 {
        self.weights[bucket * K + label.ordinal()]
    }

    pub fn logits(&self, x: &FeatureVector) -> [f64; K] {
        logits_scaled(&self.weights, 1.0, &self.bias, x)
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.bias.iter()).all(|w| w.is_finite())
    }
}

fn logits_scaled(weights: &[f64], scale: f64, bias: &[f64; K], x: &FeatureVector) -> [f64; K] {
    let mut z = [0.0; K];
    for &(j, v) in &x.entries {
        let row = &weights[j as usize * K..j as usize * K + K];
        for k in 0..K {
            z[k] += row[k] * v;
        }
    }
    for k in 0..K {
        z[k] = z[k] * scale + bias[k];
    }
    z
}

/// Numerically stable softmax.
pub fn softmax(z: &[f64; K]) -> [f64; K] {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = [0.0; K];
    let mut sum = 0.0;
    for k in 0..K {
        p[k] = (z[k] - max).exp();
        sum += p[k];
    }
    for v in &mut p {
        *v /= sum;
    }
    p
}

/// `(softmax(z) - onehot(y), -ln p_y)` for one example.
fn residual(z: &[f64; K], y: Label) -> ([f64; K], f64) {
    let mut p = softmax(z);
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = z.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    let nll = log_sum - z[y.ordinal()];
    p[y.ordinal()] -= 1.0;
    (p, nll)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub label: Label,
    pub probabilities: [f64; K],
}

fn check_dim(model: &ModelParams, x: &FeatureVector) -> Result<(), ModelError> {
    if x.dim != model.dim {
        return Err(ModelError::DimensionMismatch {
            model: model.dim,
            features: x.dim,
        });
    }
    Ok(())
}

/// Most probable label; ties go to the lowest label ordinal.
pub fn predict(model: &ModelParams, x: &FeatureVector) -> Result<Prediction, ModelError> {
    check_dim(model, x)?;
    let probabilities = softmax(&model.logits(x));
    let mut best = 0;
    for k in 1..K {
        if probabilities[k] > probabilities[best] {
            best = k;
        }
    }
    Ok(Prediction {
        label: Label::ALL[best],
        probabilities,
    })
}

pub fn predict_text(model: &ModelParams, text: &str) -> Prediction {
    predict(model, &featurize(text, model.dim)).expect("featurizer uses the model dimension")
}

/// Mean cross-entropy over `batch` plus `l2 / 2 * ||W||^2`.
pub fn loss(model: &ModelParams, batch: &[(FeatureVector, Label)], l2: f64) -> f64 {
    let data: f64 = batch
        .iter()
        .map(|(x, y)| residual(&model.logits(x), *y).1)
        .sum::<f64>()
        / batch.len().max(1) as f64;
    let penalty: f64 = model.weights.iter().map(|w| w * w).sum::<f64>() * l2 / 2.0;
    data + penalty
}

/// Dense gradient of [`loss`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    /// Same layout as [`ModelParams::weights`].
    pub weights: Vec<f64>,
    pub bias: [f64; K],
}

/// Analytic gradient of [`loss`] with respect to weights and bias.
pub fn data_gradient(model: &ModelParams, batch: &[(FeatureVector, Label)], l2: f64) -> Gradient {
    let mut g = Gradient {
        weights: model.weights.iter().map(|w| l2 * w).collect(),
        bias: [0.0; K],
    };
    let inv_n = 1.0 / batch.len().max(1) as f64;
    for (x, y) in batch {
        let (r, _) = residual(&model.logits(x), *y);
        for &(j, v) in &x.entries {
            for k in 0..K {
                g.weights[j as usize * K + k] += inv_n * r[k] * v;
            }
        }
        for k in 0..K {
            g.bias[k] += inv_n * r[k];
        }
    }
    g
}

pub fn train(dataset: &[(FeatureVector, Label)], cfg: &TrainConfig) -> Result<ModelParams, ModelError> {
    train_with_history(dataset, cfg).map(|(m, _)| m)
}

/// Trains and also returns the mean training loss of each epoch, measured
/// on the fly with the pre-update weights of every mini-batch.
///
/// Weight decay is applied lazily through a global scale factor so each step
/// only touches the buckets present in its batch; the result equals the
/// dense update `W <- (1 - lr * l2) W - lr * grad` up to rounding.
pub fn train_with_history(
    dataset: &[(FeatureVector, Label)],
    cfg: &TrainConfig,
) -> Result<(ModelParams, Vec<f64>), ModelError> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    if let Some((x, _)) = dataset.iter().find(|(x, _)| x.dim != cfg.dim) {
        return Err(ModelError::DimensionMismatch {
            model: cfg.dim,
            features: x.dim,
        });
    }
    let decay = 1.0 - cfg.learning_rate * cfg.l2;
    if decay <= 0.0 {
        return Err(ModelError::InvalidConfig(
            "learning_rate * l2 must be below 1".into(),
        ));
    }

    let mut raw = vec![0.0f64; cfg.dim * K];
    let mut scale = 1.0f64;
    let mut bias = [0.0f64; K];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut residuals: Vec<[f64; K]> = Vec::with_capacity(cfg.batch_size);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (step, chunk) in order.chunks(cfg.batch_size).enumerate() {
            residuals.clear();
            let mut batch_loss = 0.0;
            for &i in chunk {
                let (x, y) = &dataset[i];
                let (r, nll) = residual(&logits_scaled(&raw, scale, &bias, x), *y);
                batch_loss += nll;
                residuals.push(r);
            }
            if !batch_loss.is_finite() {
                return Err(ModelError::NonFiniteLoss {
                    epoch,
                    step,
                    loss: batch_loss / chunk.len() as f64,
                });
            }
            epoch_loss += batch_loss;

            scale *= decay;
            let step_size = cfg.learning_rate / chunk.len() as f64;
            let weight_step = step_size / scale;
            for (&i, r) in chunk.iter().zip(&residuals) {
                for &(j, v) in &dataset[i].0.entries {
                    let row = &mut raw[j as usize * K..j as usize * K + K];
                    for k in 0..K {
                        row[k] -= weight_step * r[k] * v;
                    }
                }
                for k in 0..K {
                    bias[k] -= step_size * r[k];
                }
            }
            if scale < MIN_SCALE {
                raw.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
        }
        history.push(epoch_loss / dataset.len() as f64);
    }
    if scale != 1.0 {
        raw.iter_mut().for_each(|w| *w *= scale);
    }
    let model = ModelParams {
        dim: cfg.dim,
        weights: raw,
        bias,
        meta: TrainMetadata::from_config(cfg, dataset.len()),
    };
    if !model.is_finite() {
        return Err(ModelError::NonFiniteLoss {
            epoch: cfg.epochs,
            step: 0,
            loss: f64::NAN,
        });
    }
    Ok((model, history))
}
