use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::{EvalReport, RunMetadata};
use super::EvalError;
use crate::corpus::{shuffled_indices, split, AnnotatedSentence, Label, SentenceRef, SplitMode, SplitSpec};
use crate::fsutil;
use crate::modeling::{featurize, model_to_bytes, predict, train, FeatureVector, ModelParams, TrainConfig};

pub type Example = (FeatureVector, Label);

pub fn featurize_labeled(items: &[(String, Label)], dim: usize) -> Vec<Example> {
    items
        .par_iter()
        .map(|(t, l)| (featurize(t, dim), *l))
        .collect()
}

pub fn featurize_sentences(sentences: &[AnnotatedSentence], dim: usize) -> Vec<Example> {
    sentences
        .par_iter()
        .map(|s| (featurize(&s.text, dim), s.label))
        .collect()
}

/// First eight bytes of the SHA-256 of the serialized model, in hex.
pub fn model_id(model: &ModelParams) -> String {
    let digest = Sha256::digest(model_to_bytes(model));
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Predicts every example and scores the predictions.
pub fn evaluate(
    model: &ModelParams,
    examples: &[Example],
    meta: RunMetadata,
) -> Result<EvalReport, EvalError> {
    let mut truth = Vec::with_capacity(examples.len());
    let mut pred = Vec::with_capacity(examples.len());
    for (x, y) in examples {
        truth.push(*y);
        pred.push(predict(model, x)?.label);
    }
    EvalReport::compute(&truth, &pred, meta)
}

/// One trained model scored on the validation and test sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run_index: usize,
    pub seed: u64,
    pub train_size: usize,
    pub valid: EvalReport,
    pub test: EvalReport,
}

/// Nested training subsets: each run shuffles pool indices with its seed and
/// every size takes a prefix of that order.
pub fn training_subsets(pool_len: usize, sizes: &[usize], seed: u64) -> Vec<Vec<usize>> {
    let order = shuffled_indices(pool_len, seed);
    sizes.iter().map(|&s| order[..s.min(pool_len)].to_vec()).collect()
}

fn run_once(
    pool: &[Example],
    valid: &[Example],
    test: &[Example],
    train_size: usize,
    cfg: &TrainConfig,
    run_index: usize,
    split_id: &str,
) -> Result<RunResult, EvalError> {
    let seed = cfg.seed.wrapping_add(run_index as u64);
    let subset = &training_subsets(pool.len(), &[train_size], seed)[0];
    let train_set: Vec<Example> = subset.iter().map(|&i| pool[i].clone()).collect();
    let model = train(&train_set, &cfg.with_seed(seed))?;
    let meta = RunMetadata {
        seed,
        model_id: model_id(&model),
        split_id: split_id.to_string(),
    };
    Ok(RunResult {
        run_index,
        seed,
        train_size,
        valid: evaluate(&model, valid, meta.clone())?,
        test: evaluate(&model, test, meta)?,
    })
}

/// Mean and per-run F1 over repeated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub n_runs: usize,
    pub base_seed: u64,
    pub train_config: TrainConfig,
    pub split_id: String,
    pub mean_valid_f1: f64,
    pub mean_test_f1: f64,
    pub valid_f1: Vec<f64>,
    pub test_f1: Vec<f64>,
    pub runs: Vec<RunResult>,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

impl ExperimentReport {
    fn from_runs(runs: Vec<RunResult>, cfg: &TrainConfig, split_id: &str) -> Self {
        let valid_f1: Vec<f64> = runs.iter().map(|r| r.valid.f1_micro).collect();
        let test_f1: Vec<f64> = runs.iter().map(|r| r.test.f1_micro).collect();
        ExperimentReport {
            n_runs: runs.len(),
            base_seed: cfg.seed,
            train_config: cfg.clone(),
            split_id: split_id.to_string(),
            mean_valid_f1: mean(&valid_f1),
            mean_test_f1: mean(&test_f1),
            valid_f1,
            test_f1,
            runs,
        }
    }

    /// Writes `run-<i>.json` per run and `report.json` into `dir`.
    pub fn persist(&self, dir: &Path) -> Result<(), EvalError> {
        for run in &self.runs {
            let path = dir.join(format!("run-{}.json", run.run_index));
            fsutil::write_json(&path, run).map_err(|source| EvalError::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
        let path = dir.join("report.json");
        fsutil::write_json(&path, self).map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Reads back the `run-<i>.json` artifacts written by [`ExperimentReport::persist`].
pub fn load_run_artifacts(dir: &Path, n_runs: usize) -> Result<Vec<RunResult>, EvalError> {
    (0..n_runs)
        .map(|i| {
            let path = dir.join(format!("run-{i}.json"));
            let io = |source| EvalError::Io {
                path: path.display().to_string(),
                source,
            };
            let raw = std::fs::read_to_string(&path).map_err(io)?;
            serde_json::from_str(&raw).map_err(|e| EvalError::Io {
                path: path.display().to_string(),
                source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
            })
        })
        .collect()
}

/// Repeats train/evaluate `n_runs` times on a fixed split. Run `i` uses seed
/// `cfg.seed + i` for the training order and the optimizer.
pub fn run_fixed(
    pool: &[Example],
    valid: &[Example],
    test: &[Example],
    cfg: &TrainConfig,
    n_runs: usize,
    split_id: &str,
) -> Result<ExperimentReport, EvalError> {
    if n_runs == 0 {
        return Err(EvalError::NoRuns);
    }
    let runs = (0..n_runs)
        .into_par_iter()
        .map(|r| run_once(pool, valid, test, pool.len(), cfg, r, split_id))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentReport::from_runs(runs, cfg, split_id))
}

/// Repeats split/train/evaluate `n_runs` times; run `i` re-splits the corpus
/// and trains with seed `cfg.seed + i`.
pub fn run_experiment(
    sentences: &[AnnotatedSentence],
    spec: SplitSpec,
    mode: SplitMode,
    cfg: &TrainConfig,
    n_runs: usize,
) -> Result<ExperimentReport, EvalError> {
    if n_runs == 0 {
        return Err(EvalError::NoRuns);
    }
    let examples = featurize_sentences(sentences, cfg.dim);
    let position: HashMap<(&str, usize), usize> = sentences
        .iter()
        .enumerate()
        .map(|(i, s)| ((s.doc_id.as_str(), s.index), i))
        .collect();
    let runs = (0..n_runs)
        .into_par_iter()
        .map(|r| {
            let seed = cfg.seed.wrapping_add(r as u64);
            let parts = split(sentences, spec, mode, seed)?;
            let pick = |refs: &[SentenceRef]| -> Vec<Example> {
                refs.iter()
                    .map(|x| examples[position[&(x.doc_id.as_str(), x.index)]].clone())
                    .collect()
            };
            let (pool, valid, test) = (pick(&parts.train), pick(&parts.valid), pick(&parts.test));
            run_once(&pool, &valid, &test, pool.len(), cfg, r, &format!("seed-{seed}"))
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(ExperimentReport::from_runs(runs, cfg, "per-run"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub train_size: usize,
    pub mean_valid_f1: f64,
    pub mean_test_f1: f64,
    pub valid_f1: Vec<f64>,
    pub test_f1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub base_seed: u64,
    pub n_runs: usize,
    pub pool_size: usize,
    pub valid_size: usize,
    pub test_size: usize,
    pub points: Vec<CurvePoint>,
}

impl LearningCurve {
    /// `size\tsplit\trun\tf1` rows, valid before test within each size.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("size\tsplit\trun\tf1\n");
        for p in &self.points {
            for (name, values) in [("valid", &p.valid_f1), ("test", &p.test_f1)] {
                for (run, f1) in values.iter().enumerate() {
                    out.push_str(&format!("{}\t{name}\t{run}\t{f1}\n", p.train_size));
                }
            }
        }
        out
    }
}

/// Parses `start:end:step` (inclusive) or a comma list into training sizes.
pub fn parse_size_range(spec: &str) -> Result<Vec<usize>, EvalError> {
    let bad = || EvalError::BadSizes(spec.to_string());
    let sizes: Vec<usize> = if spec.contains(':') {
        let parts: Vec<usize> = spec
            .split(':')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let [start, end, step] = parts[..] else {
            return Err(bad());
        };
        if step == 0 || start > end {
            return Err(bad());
        }
        (start..=end).step_by(step).collect()
    } else {
        spec.split(',')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(bad());
    }
    Ok(sizes)
}

/// Scores models trained on growing prefixes of the shuffled pool against
/// fixed validation and test sets.
pub fn learning_curve(
    pool: &[Example],
    valid: &[Example],
    test: &[Example],
    sizes: &[usize],
    cfg: &TrainConfig,
    n_runs: usize,
) -> Result<LearningCurve, EvalError> {
    if n_runs == 0 {
        return Err(EvalError::NoRuns);
    }
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) || sizes[0] == 0 {
        return Err(EvalError::BadSizes(format!(
            "{sizes:?}: sizes must be positive and strictly increasing"
        )));
    }
    if let Some(&size) = sizes.iter().find(|&&s| s > pool.len()) {
        return Err(EvalError::SizeExceedsPool {
            size,
            pool: pool.len(),
        });
    }
    let jobs: Vec<(usize, usize)> = (0..sizes.len())
        .flat_map(|p| (0..n_runs).map(move |r| (p, r)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(p, r)| run_once(pool, valid, test, sizes[p], cfg, r, "fixed"))
        .collect::<Result<Vec<_>, _>>()?;

    let points = sizes
        .iter()
        .enumerate()
        .map(|(p, &train_size)| {
            let runs = &results[p * n_runs..(p + 1) * n_runs];
            let valid_f1: Vec<f64> = runs.iter().map(|r| r.valid.f1_micro).collect();
            let test_f1: Vec<f64> = runs.iter().map(|r| r.test.f1_micro).collect();
            CurvePoint {
                train_size,
                mean_valid_f1: mean(&valid_f1),
                mean_test_f1: mean(&test_f1),
                valid_f1,
                test_f1,
            }
        })
        .collect();
    Ok(LearningCurve {
        base_seed: cfg.seed,
        n_runs,
        pool_size: pool.len(),
        valid_size: valid.len(),
        test_size: test.len(),
        points,
    })
}
