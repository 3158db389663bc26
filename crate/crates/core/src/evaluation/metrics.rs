use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::Label;

const K: usize = Label::COUNT;

fn check_lengths(truth: &[Label], pred: &[Label]) -> Result<(), EvalError> {
    if truth.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            truth: truth.len(),
            pred: pred.len(),
        });
    }
    Ok(())
}

/// Pooled true-positive, false-positive and false-negative counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PooledCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl PooledCounts {
    pub fn from_confusion(m: &ConfusionMatrix) -> Self {
        let mut c = PooledCounts::default();
        for label in Label::ALL {
            let s = m.class_counts(label);
            c.tp += s.tp;
            c.fp += s.fp;
            c.fn_ += s.fn_;
        }
        c
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// `2PR / (P + R)`, evaluated as `2TP / (2TP + FP + FN)` so it is exact
    /// in integer arithmetic up to the final division.
    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Micro-averaged F1 over the seven labels from pooled TP/FP/FN.
pub fn f1_micro(truth: &[Label], pred: &[Label]) -> Result<f64, EvalError> {
    check_lengths(truth, pred)?;
    if truth.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    Ok(PooledCounts::from_confusion(&confusion(truth, pred)?).f1())
}

/// Counts with rows = true label and columns = predicted label.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; K]; K],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn get(&self, truth: Label, pred: Label) -> usize {
        self.counts[truth.ordinal()][pred.ordinal()]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, label: Label) -> usize {
        self.counts[label.ordinal()].iter().sum()
    }

    pub fn predicted(&self, label: Label) -> usize {
        self.counts.iter().map(|row| row[label.ordinal()]).sum()
    }

    pub fn trace(&self) -> usize {
        (0..K).map(|k| self.counts[k][k]).sum()
    }

    pub fn class_counts(&self, label: Label) -> ClassCounts {
        let tp = self.get(label, label);
        ClassCounts {
            tp,
            fp: self.predicted(label) - tp,
            fn_: self.support(label) - tp,
        }
    }

    /// Each row divided by its support; rows without support stay zero.
    pub fn row_normalized(&self) -> [[f64; K]; K] {
        let mut out = [[0.0; K]; K];
        for (r, row) in self.counts.iter().enumerate() {
            let support: usize = row.iter().sum();
            if support > 0 {
                for (c, &n) in row.iter().enumerate() {
                    out[r][c] = n as f64 / support as f64;
                }
            }
        }
        out
    }

    /// `truth\tpred\tcount\trow_fraction` for every cell, label order.
    pub fn to_tsv(&self) -> String {
        let norm = self.row_normalized();
        let mut out = String::from("truth\tpred\tcount\trow_fraction\n");
        for t in Label::ALL {
            for p in Label::ALL {
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\n",
                    t,
                    p,
                    self.get(t, p),
                    norm[t.ordinal()][p.ordinal()]
                ));
            }
        }
        out
    }
}

pub fn confusion(truth: &[Label], pred: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    check_lengths(truth, pred)?;
    let mut m = ConfusionMatrix::default();
    for (t, p) in truth.iter().zip(pred) {
        m.counts[t.ordinal()][p.ordinal()] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    pub model_id: String,
    pub split_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub f1_micro: f64,
    pub per_class: BTreeMap<Label, ClassStats>,
    pub confusion: ConfusionMatrix,
    pub n_examples: usize,
    pub meta: RunMetadata,
}

impl EvalReport {
    pub fn compute(truth: &[Label], pred: &[Label], meta: RunMetadata) -> Result<Self, EvalError> {
        let f1_micro = f1_micro(truth, pred)?;
        let confusion = confusion(truth, pred)?;
        let per_class = Label::ALL
            .iter()
            .map(|&l| {
                let c = confusion.class_counts(l);
                let precision = ratio(c.tp, c.tp + c.fp);
                let recall = ratio(c.tp, c.tp + c.fn_);
                let stats = ClassStats {
                    precision,
                    recall,
                    f1: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
                    support: confusion.support(l),
                };
                (l, stats)
            })
            .collect();
        Ok(EvalReport {
            f1_micro,
            per_class,
            confusion,
            n_examples: truth.len(),
            meta,
        })
    }
}
