use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AnnotatedSentence, CorpusError, Label};

const RATIO_TOLERANCE: f64 = 1e-9;

/// How the corpus is divided into train/valid/test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitSpec {
    /// Fractions summing to 1, rounded by largest remainder.
    Ratios([f64; 3]),
    /// Exact part sizes; they must add up to the corpus size.
    Sizes([usize; 3]),
}

impl SplitSpec {
    pub const DEFAULT_RATIOS: [f64; 3] = [0.7, 0.15, 0.15];

    /// Part sizes for a corpus of `n` items.
    pub fn part_sizes(&self, n: usize) -> Result<[usize; 3], CorpusError> {
        match *self {
            SplitSpec::Ratios(r) => {
                validate_ratios(r)?;
                Ok(largest_remainder(n, r))
            }
            SplitSpec::Sizes(s) => {
                let total: usize = s.iter().sum();
                if total != n {
                    return Err(CorpusError::BadSizes(format!(
                        "{}+{}+{} = {total}, corpus has {n} sentences",
                        s[0], s[1], s[2]
                    )));
                }
                Ok(s)
            }
        }
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::Ratios(Self::DEFAULT_RATIOS)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    #[default]
    Unstratified,
    /// Each label is spread over the parts in proportion to the part sizes.
    Stratified,
}

fn validate_ratios(r: [f64; 3]) -> Result<(), CorpusError> {
    if r.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return Err(CorpusError::BadRatios(format!("{r:?}: every ratio must be positive")));
    }
    let sum: f64 = r.iter().sum();
    if (sum - 1.0).abs() > RATIO_TOLERANCE {
        return Err(CorpusError::BadRatios(format!("{r:?} sums to {sum}, expected 1")));
    }
    Ok(())
}

/// Rounds `n * ratios` to integers summing to `n`. Leftover units go to the
/// largest fractional parts; ties go to the earlier part (valid before test).
pub fn largest_remainder(n: usize, ratios: [f64; 3]) -> [usize; 3] {
    let mut sizes = [0usize; 3];
    let mut fracs = [0f64; 3];
    for i in 0..3 {
        let mut q = n as f64 * ratios[i];
        if (q - q.round()).abs() < RATIO_TOLERANCE * n.max(1) as f64 {
            q = q.round();
        }
        sizes[i] = q.floor() as usize;
        fracs[i] = q - q.floor();
    }
    let assigned: usize = sizes.iter().sum();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| fracs[b].total_cmp(&fracs[a]).then(a.cmp(&b)));
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SentenceRef {
    pub doc_id: String,
    pub index: usize,
}

impl From<&AnnotatedSentence> for SentenceRef {
    fn from(s: &AnnotatedSentence) -> Self {
        SentenceRef {
            doc_id: s.doc_id.clone(),
            index: s.index,
        }
    }
}

/// Membership of each part, in shuffled order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub seed: u64,
    pub spec: SplitSpec,
    pub mode: SplitMode,
    /// Effective fractions `(train, valid, test)` of the corpus.
    pub ratios: [f64; 3],
    pub train: Vec<SentenceRef>,
    pub valid: Vec<SentenceRef>,
    pub test: Vec<SentenceRef>,
}

impl DatasetSplit {
    pub fn sizes(&self) -> [usize; 3] {
        [self.train.len(), self.valid.len(), self.test.len()]
    }

    /// Resolves the references against `sentences`, keeping split order.
    pub fn materialize(
        &self,
        sentences: &[AnnotatedSentence],
    ) -> Result<[Vec<AnnotatedSentence>; 3], CorpusError> {
        let lookup: HashMap<(&str, usize), &AnnotatedSentence> = sentences
            .iter()
            .map(|s| ((s.doc_id.as_str(), s.index), s))
            .collect();
        let resolve = |refs: &[SentenceRef]| {
            refs.iter()
                .map(|r| {
                    lookup
                        .get(&(r.doc_id.as_str(), r.index))
                        .map(|s| (*s).clone())
                        .ok_or_else(|| CorpusError::InvalidAnnotation {
                            doc_id: r.doc_id.clone(),
                            reason: format!("split references missing sentence {}", r.index),
                        })
                })
                .collect::<Result<Vec<_>, _>>()
        };
        Ok([resolve(&self.train)?, resolve(&self.valid)?, resolve(&self.test)?])
    }
}

/// Deterministic permutation of `0..n` from a ChaCha8 stream seeded with `seed`.
pub fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Orders indices so that any prefix holds each label in roughly corpus
/// proportion: labels are shuffled independently, each item is keyed by its
/// quantile within its label, and items are sorted by key.
fn stratified_order(labels: &[Label], seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keyed: Vec<(f64, usize, usize)> = Vec::with_capacity(labels.len());
    for label in Label::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
        members.shuffle(&mut rng);
        let count = members.len() as f64;
        for (pos, i) in members.into_iter().enumerate() {
            keyed.push(((pos as f64 + 0.5) / count, label.ordinal(), i));
        }
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, _, i)| i).collect()
}

/// Shuffles the sentences with `seed` and partitions them per `spec`.
pub fn split(
    sentences: &[AnnotatedSentence],
    spec: SplitSpec,
    mode: SplitMode,
    seed: u64,
) -> Result<DatasetSplit, CorpusError> {
    let n = sentences.len();
    let sizes = spec.part_sizes(n)?;
    let order = match mode {
        SplitMode::Unstratified => shuffled_indices(n, seed),
        SplitMode::Stratified => {
            let labels: Vec<Label> = sentences.iter().map(|s| s.label).collect();
            stratified_order(&labels, seed)
        }
    };
    let refs = |range: std::ops::Range<usize>| -> Vec<SentenceRef> {
        order[range].iter().map(|&i| SentenceRef::from(&sentences[i])).collect()
    };
    let ratios = if n == 0 {
        match spec {
            SplitSpec::Ratios(r) => r,
            SplitSpec::Sizes(_) => [0.0; 3],
        }
    } else {
        sizes.map(|s| s as f64 / n as f64)
    };
    Ok(DatasetSplit {
        seed,
        spec,
        mode,
        ratios,
        train: refs(0..sizes[0]),
        valid: refs(sizes[0]..sizes[0] + sizes[1]),
        test: refs(sizes[0] + sizes[1]..n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(n: usize) -> Vec<AnnotatedSentence> {
        (0..n)
            .map(|i| AnnotatedSentence {
                doc_id: format!("d{}", i / 10),
                index: i % 10,
                text: format!("s{i}"),
                label: Label::ALL[i % 7],
            })
            .collect()
    }

    #[test]
    fn paper_ratio_arithmetic() {
        assert_eq!(largest_remainder(78_000, [0.7, 0.15, 0.15]), [54_600, 11_700, 11_700]);
    }

    #[test]
    fn ten_items_tie_goes_to_valid() {
        assert_eq!(largest_remainder(10, [0.7, 0.15, 0.15]), [7, 2, 1]);
    }

    #[test]
    fn remainders_always_sum_to_n() {
        for n in 0..200 {
            for r in [[0.7, 0.15, 0.15], [0.8, 0.1, 0.1], [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]] {
                let s = largest_remainder(n, r);
                assert_eq!(s.iter().sum::<usize>(), n);
                for i in 0..3 {
                    assert!((s[i] as f64 - n as f64 * r[i]).abs() < 1.0 + 1e-9);
                }
            }
        }
    }

    #[test]
    fn absolute_sizes() {
        let c = corpus(78_000);
        let s = split(&c, SplitSpec::Sizes([58_000, 10_000, 10_000]), SplitMode::Unstratified, 1)
            .unwrap();
        assert_eq!(s.sizes(), [58_000, 10_000, 10_000]);
    }

    #[test]
    fn bad_inputs() {
        let c = corpus(10);
        assert!(matches!(
            split(&c, SplitSpec::Ratios([0.5, 0.5, 0.5]), SplitMode::Unstratified, 0),
            Err(CorpusError::BadRatios(_))
        ));
        assert!(matches!(
            split(&c, SplitSpec::Ratios([1.0, 0.0, 0.0]), SplitMode::Unstratified, 0),
            Err(CorpusError::BadRatios(_))
        ));
        assert!(matches!(
            split(&c, SplitSpec::Sizes([5, 5, 5]), SplitMode::Unstratified, 0),
            Err(CorpusError::BadSizes(_))
        ));
    }

    #[test]
    fn seeds_drive_membership() {
        let c = corpus(500);
        let spec = SplitSpec::default();
        let a = split(&c, spec, SplitMode::Unstratified, 7).unwrap();
        let b = split(&c, spec, SplitMode::Unstratified, 7).unwrap();
        let other = split(&c, spec, SplitMode::Unstratified, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.train, other.train);
    }

    #[test]
    fn stratified_keeps_label_shares() {
        let c = corpus(7 * 100);
        let s = split(&c, SplitSpec::default(), SplitMode::Stratified, 3).unwrap();
        assert_eq!(s.sizes(), [490, 105, 105]);
        let [train, valid, test] = s.materialize(&c).unwrap();
        for part in [&train, &valid, &test] {
            let n = part.len() as f64;
            for l in Label::ALL {
                let share = part.iter().filter(|x| x.label == l).count() as f64 / n;
                assert!((share - 1.0 / 7.0).abs() <= 1.0 / n + 1e-9, "{l}: {share}");
            }
        }
    }

    #[test]
    fn split_json_round_trip() {
        let c = corpus(20);
        let s = split(&c, SplitSpec::default(), SplitMode::Unstratified, 9).unwrap();
        let back: DatasetSplit = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
