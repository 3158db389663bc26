//! F1-micro, confusion matrices, multi-run experiments, training-size
//! learning curves and class-distribution reports.

mod harness;
mod metrics;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use harness::{
    evaluate, featurize_labeled, featurize_sentences, learning_curve, load_run_artifacts, model_id,
    parse_size_range, run_experiment, run_fixed, training_subsets, CurvePoint, Example,
    ExperimentReport, LearningCurve, RunResult,
};
pub use metrics::{
    confusion, f1_micro, ClassCounts, ClassStats, ConfusionMatrix, EvalReport, PooledCounts,
    RunMetadata,
};

use crate::corpus::{class_distribution, label_histogram, CorpusError, Label};
use crate::modeling::ModelError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("truth has {truth} labels but prediction has {pred}")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("no examples to evaluate")]
    EmptyInput,
    #[error("training size {size} exceeds the pool of {pool}")]
    SizeExceedsPool { size: usize, pool: usize },
    #[error("invalid size list: {0}")]
    BadSizes(String),
    #[error("n_runs must be at least 1")]
    NoRuns,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Label shares of a corpus with a printable table and plot data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub total: usize,
    pub counts: BTreeMap<Label, usize>,
    pub fractions: BTreeMap<Label, f64>,
}

pub fn distribution_report(labels: &[Label]) -> Result<DistributionReport, EvalError> {
    let fractions = class_distribution(labels)?;
    Ok(DistributionReport {
        total: labels.len(),
        counts: label_histogram(labels),
        fractions,
    })
}

impl DistributionReport {
    pub fn render_table(&self) -> String {
        let mut out = format!("{:<14} {:>8} {:>8}\n", "label", "count", "percent");
        for (label, count) in &self.counts {
            out.push_str(&format!(
                "{:<14} {:>8} {:>7.2}%\n",
                label.token(),
                count,
                self.fractions[label] * 100.0
            ));
        }
        out.push_str(&format!("{:<14} {:>8} {:>7.2}%\n", "total", self.total, 100.0));
        out
    }

    /// `label\tfraction` rows for external plotting.
    pub fn plot_tsv(&self) -> String {
        let mut out = String::from("label\tfraction\n");
        for (label, f) in &self.fractions {
            out.push_str(&format!("{}\t{}\n", label.token(), f));
        }
        out
    }
}
