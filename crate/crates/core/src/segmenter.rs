//! Rule-based sentence segmentation for line-structured resume text.
//!
//! Lines are hard boundaries. Inside a line a fragment ends after sentence
//! punctuation followed by whitespace or the end of the line, unless the
//! period closes a known abbreviation or sits in an e-mail/URL token.
//! Leading bullet glyphs and list numbers are stripped, and fragments shorter
//! than `min_chars` are dropped.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::NormalizedDocument;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading segmentation config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing segmentation config {path}: {message}")]
    Parse { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    /// Abbreviations whose trailing period never ends a sentence, compared
    /// case-insensitively and without the final period.
    pub abbreviations: Vec<String>,
    /// Fragments whose trimmed length in characters is below this are dropped.
    pub min_chars: usize,
    /// Characters that end a sentence when followed by whitespace.
    pub punctuation: Vec<char>,
    /// Glyphs stripped from the start of each fragment.
    pub bullets: Vec<char>,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            abbreviations: [
                "Mr", "Ms", "Dr", "Inc", "Ltd", "St", "Jr", "Sr", "etc", "e.g", "i.e", "B.S",
                "M.S", "Ph.D",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
            min_chars: 2,
            punctuation: vec!['.', '!', '?', ';'],
            bullets: vec!['•', '-', '*', '◦'],
        }
    }
}

impl SegmentationConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(s)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("segmentation config is always serializable")
    }

    fn is_abbreviation(&self, word: &str) -> bool {
        self.abbreviations
            .iter()
            .any(|a| a.trim_end_matches('.').eq_ignore_ascii_case(word))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
    /// Character (not byte) offsets into the normalized document text, end
    /// exclusive. The span starts at any stripped bullet marker.
    pub span: (usize, usize),
}

impl Sentence {
    /// The document slice covered by this sentence's span.
    pub fn span_text<'a>(&self, doc_text: &'a str) -> &'a str {
        char_slice(doc_text, self.span.0, self.span.1)
    }
}

pub(crate) fn char_slice(s: &str, start: usize, end: usize) -> &str {
    let mut indices = s.char_indices().map(|(i, _)| i).chain(std::iter::once(s.len()));
    let b_start = indices.nth(start).unwrap_or(s.len());
    let b_end = if end > start {
        indices.nth(end - start - 1).unwrap_or(s.len())
    } else {
        b_start
    };
    &s[b_start..b_end]
}

/// A segmented document as persisted by `rcw segment`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentedDocument {
    pub doc_id: String,
    pub sentences: Vec<Sentence>,
}

/// Splits a normalized document into sentences.
pub fn segment(doc: &NormalizedDocument, cfg: &SegmentationConfig) -> Vec<Sentence> {
    let text = doc.text.as_str();
    let mut sentences = Vec::new();
    let mut line_start_byte = 0usize;
    let mut line_start_char = 0usize;

    for line in text.split('\n') {
        for (b0, b1) in split_line(line, cfg) {
            let raw = &line[b0..b1];
            let stripped = strip_bullets(raw, cfg).trim();
            if stripped.chars().count() < cfg.min_chars {
                continue;
            }
            // Span covers the raw fragment minus surrounding whitespace.
            let lead_ws = raw.len() - raw.trim_start().len();
            let trimmed = raw.trim();
            let span_b0 = b0 + lead_ws;
            let start = line_start_char + line[..span_b0].chars().count();
            let end = start + trimmed.chars().count();
            sentences.push(Sentence {
                doc_id: doc.doc_id.clone(),
                index: sentences.len(),
                text: stripped.to_string(),
                span: (start, end),
            });
        }
        line_start_byte += line.len() + 1;
        line_start_char += line.chars().count() + 1;
    }
    debug_assert!(line_start_byte >= text.len());
    sentences
}

/// Byte ranges of the fragments of one line, in order, covering the line.
fn split_line(line: &str, cfg: &SegmentationConfig) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut frag_start = 0usize;
    let mut chars = line.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !cfg.punctuation.contains(&c) {
            continue;
        }
        let after = i + c.len_utf8();
        let boundary = match chars.peek() {
            None => true,
            Some(&(_, next)) => next.is_whitespace(),
        };
        if !boundary {
            continue;
        }
        if c == '.' && period_is_guarded(line, frag_start, i, cfg) {
            continue;
        }
        out.push((frag_start, after));
        frag_start = after;
    }
    if frag_start < line.len() {
        out.push((frag_start, line.len()));
    }
    out
}

/// True when the period at byte `dot` must not end a sentence.
fn period_is_guarded(line: &str, frag_start: usize, dot: usize, cfg: &SegmentationConfig) -> bool {
    let token_start = line[..dot]
        .rfind(char::is_whitespace)
        .map(|p| p + line[p..].chars().next().map_or(1, char::len_utf8))
        .unwrap_or(0);
    let token = &line[token_start..dot];

    if token.contains('@') || token.contains("://") {
        return true;
    }
    let word = token.trim_start_matches(|c: char| !c.is_alphanumeric());
    if !word.is_empty() && cfg.is_abbreviation(word) {
        return true;
    }
    // A list number such as "1." opening a fragment is a bullet marker.
    let opening = line[frag_start..token_start].trim().is_empty();
    opening && is_list_number(token)
}

fn is_list_number(token: &str) -> bool {
    (1..=3).contains(&token.len()) && token.bytes().all(|b| b.is_ascii_digit())
}

/// Removes leading bullet glyphs and list numbers (`1.`, `2)`).
fn strip_bullets<'a>(fragment: &'a str, cfg: &SegmentationConfig) -> &'a str {
    let mut rest = fragment.trim_start();
    loop {
        if let Some(c) = rest.chars().next().filter(|c| cfg.bullets.contains(c)) {
            rest = rest[c.len_utf8()..].trim_start();
            continue;
        }
        let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
        if (1..=3).contains(&digits) {
            let after = &rest[digits..];
            let mut it = after.chars();
            if matches!(it.next(), Some('.') | Some(')'))
                && it.next().is_none_or(char::is_whitespace)
            {
                rest = after[1..].trim_start();
                continue;
            }
        }
        return rest;
    }
}

/// Character-level comparison of a document against its segmentation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Document characters that no sentence accounts for.
    pub missing: BTreeMap<char, usize>,
    /// Sentence characters absent from the document.
    pub unexpected: BTreeMap<char, usize>,
}

impl CoverageReport {
    pub fn is_lossless(&self) -> bool {
        self.missing.is_empty() && self.unexpected.is_empty()
    }
}

/// Multiset difference between the non-whitespace, non-bullet characters of
/// the document and those of the concatenated sentence texts. Bullet
/// characters are the configured glyphs plus whatever each sentence span
/// holds in front of its text (stripped list markers).
pub fn coverage_check(
    doc: &NormalizedDocument,
    sentences: &[Sentence],
    cfg: &SegmentationConfig,
) -> CoverageReport {
    let mut counts: BTreeMap<char, i64> = BTreeMap::new();
    let counted = |c: &char| !c.is_whitespace() && !cfg.bullets.contains(c);

    for c in doc.text.chars().filter(counted) {
        *counts.entry(c).or_default() += 1;
    }
    for s in sentences {
        let span = s.span_text(&doc.text);
        let prefix = span.strip_suffix(s.text.as_str()).unwrap_or("");
        for c in prefix.chars().chain(s.text.chars()).filter(counted) {
            *counts.entry(c).or_default() -= 1;
        }
    }
    let mut report = CoverageReport::default();
    for (c, n) in counts {
        match n {
            n if n > 0 => {
                report.missing.insert(c, n as usize);
            }
            n if n < 0 => {
                report.unexpected.insert(c, (-n) as usize);
            }
            _ => {}
        }
    }
    report
}
