use std::collections::BTreeMap;
use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

/// Default hashing dimensionality, 2^18.
pub const DEFAULT_DIM: usize = 1 << 18;

/// Bumped whenever tokenization or hashing changes.
pub const TOKENIZER_VERSION: u32 = 1;

/// Sparse, L2-normalized hashed n-gram vector. Entries are sorted by bucket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub dim: usize,
    pub entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    pub fn zero(dim: usize) -> Self {
        FeatureVector {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&(_, w)| w == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn get(&self, bucket: u32) -> f64 {
        self.entries
            .binary_search_by_key(&bucket, |&(b, _)| b)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    /// Builds a normalized vector from raw bucket counts.
    pub fn from_counts(dim: usize, counts: BTreeMap<u32, f64>) -> Self {
        let norm = counts.values().map(|w| w * w).sum::<f64>().sqrt();
        let entries = if norm > 0.0 {
            counts.into_iter().map(|(b, w)| (b, w / norm)).collect()
        } else {
            Vec::new()
        };
        FeatureVector { dim, entries }
    }
}

/// 64-bit FNV-1a of the UTF-8 bytes of `gram`.
pub fn hash_ngram(gram: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(gram.as_bytes());
    h.finish()
}

pub fn bucket(gram: &str, dim: usize) -> u32 {
    (hash_ngram(gram) % dim as u64) as u32
}

/// Lowercased alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Unigram and space-joined bigram counts before normalization.
pub fn ngram_counts(text: &str, dim: usize) -> BTreeMap<u32, f64> {
    let tokens = tokenize(text);
    let mut counts = BTreeMap::new();
    for t in &tokens {
        *counts.entry(bucket(t, dim)).or_insert(0.0) += 1.0;
    }
    for pair in tokens.windows(2) {
        let gram = format!("{} {}", pair[0], pair[1]);
        *counts.entry(bucket(&gram, dim)).or_insert(0.0) += 1.0;
    }
    counts
}

/// Hashes unigrams and bigrams of `text` into `dim` buckets and L2-normalizes.
pub fn featurize(text: &str, dim: usize) -> FeatureVector {
    assert!(dim > 0 && dim <= u32::MAX as usize + 1, "dimension out of range");
    FeatureVector::from_counts(dim, ngram_counts(text, dim))
}
