//! Label taxonomy, per-resume annotation files, corpus assembly, seeded
//! splitting and class-distribution statistics.

mod label;
mod split;

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use label::{parse_label, Label};
pub use split::{
    largest_remainder, shuffled_indices, split, DatasetSplit, SentenceRef, SplitMode, SplitSpec,
};

use crate::fsutil;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("{file}:{line}: {kind}")]
    Format {
        file: String,
        line: usize,
        kind: FormatErrorKind,
    },
    #[error("duplicate doc id `{0}`")]
    DuplicateDocId(String),
    #[error("invalid annotation for `{doc_id}`: {reason}")]
    InvalidAnnotation { doc_id: String, reason: String },
    #[error("bad split ratios: {0}")]
    BadRatios(String),
    #[error("bad split sizes: {0}")]
    BadSizes(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormatErrorKind {
    MissingTab,
    UnknownLabel(String),
    EmptyText,
    BadField(String),
}

impl std::fmt::Display for FormatErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FormatErrorKind::MissingTab => f.write_str("line has no tab separator"),
            FormatErrorKind::UnknownLabel(t) => write!(f, "unknown label `{t}`"),
            FormatErrorKind::EmptyText => f.write_str("empty sentence text"),
            FormatErrorKind::BadField(m) => f.write_str(m),
        }
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
    pub label: Label,
}

/// Replaces the characters that would break the line format with spaces.
pub fn sanitize_text(text: &str) -> String {
    text.replace(['\t', '\n', '\r'], " ")
}

/// The exported annotation of one resume.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResumeAnnotationFile {
    pub doc_id: String,
    pub sentences: Vec<AnnotatedSentence>,
}

impl ResumeAnnotationFile {
    /// Builds a file from `(text, label)` pairs in sentence order.
    pub fn from_labeled<I, S>(doc_id: impl Into<String>, items: I) -> Self
    where
        I: IntoIterator<Item = (S, Label)>,
        S: AsRef<str>,
    {
        let doc_id = doc_id.into();
        let sentences = items
            .into_iter()
            .enumerate()
            .map(|(index, (text, label))| AnnotatedSentence {
                doc_id: doc_id.clone(),
                index,
                text: sanitize_text(text.as_ref()),
                label,
            })
            .collect();
        ResumeAnnotationFile { doc_id, sentences }
    }

    /// One `LABEL\ttext\n` line per sentence, in index order.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for s in &self.sentences {
            out.push_str(s.label.token());
            out.push('\t');
            out.push_str(&sanitize_text(&s.text));
            out.push('\n');
        }
        out
    }

    pub fn parse(doc_id: &str, content: &str) -> Result<Self, CorpusError> {
        let err = |line: usize, kind| CorpusError::Format {
            file: doc_id.to_string(),
            line,
            kind,
        };
        let body = content.strip_suffix('\n').unwrap_or(content);
        let mut sentences = Vec::new();
        if !content.is_empty() {
            for (i, line) in body.split('\n').enumerate() {
                let (token, text) = line
                    .split_once('\t')
                    .ok_or_else(|| err(i + 1, FormatErrorKind::MissingTab))?;
                let label = parse_label(token)
                    .map_err(|_| err(i + 1, FormatErrorKind::UnknownLabel(token.to_string())))?;
                if text.trim().is_empty() {
                    return Err(err(i + 1, FormatErrorKind::EmptyText));
                }
                if text.contains(['\t', '\r']) {
                    return Err(err(
                        i + 1,
                        FormatErrorKind::BadField("sentence text contains a tab or CR".into()),
                    ));
                }
                sentences.push(AnnotatedSentence {
                    doc_id: doc_id.to_string(),
                    index: i,
                    text: text.to_string(),
                    label,
                });
            }
        }
        Ok(ResumeAnnotationFile {
            doc_id: doc_id.to_string(),
            sentences,
        })
    }

    fn validate(&self) -> Result<(), CorpusError> {
        let invalid = |reason: String| CorpusError::InvalidAnnotation {
            doc_id: self.doc_id.clone(),
            reason,
        };
        if self.doc_id.is_empty() || self.doc_id.contains(['\t', '\n', '/', '\\']) {
            return Err(invalid("doc id must be a non-empty file name".into()));
        }
        for (i, s) in self.sentences.iter().enumerate() {
            if s.index != i {
                return Err(invalid(format!("index {} at position {i}", s.index)));
            }
            if s.doc_id != self.doc_id {
                return Err(invalid(format!("sentence {i} belongs to `{}`", s.doc_id)));
            }
            if s.text.trim().is_empty() {
                return Err(invalid(format!("sentence {i} has empty text")));
            }
        }
        Ok(())
    }
}

/// Path of the annotation file for `doc_id` inside `dir`.
pub fn annotation_path(dir: &Path, doc_id: &str) -> PathBuf {
    dir.join(format!("{doc_id}.txt"))
}

pub fn write_annotation_file(dir: &Path, file: &ResumeAnnotationFile) -> Result<PathBuf, CorpusError> {
    file.validate()?;
    let path = annotation_path(dir, &file.doc_id);
    fsutil::write_atomic(&path, file.to_file_string().as_bytes()).map_err(io_err(&path))?;
    Ok(path)
}

/// Reads an annotation file; the doc id is the file stem.
pub fn read_annotation_file(path: &Path) -> Result<ResumeAnnotationFile, CorpusError> {
    let content = std::fs::read_to_string(path).map_err(io_err(path))?;
    let doc_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    ResumeAnnotationFile::parse(&doc_id, &content).map_err(|e| match e {
        CorpusError::Format { line, kind, .. } => CorpusError::Format {
            file: path.display().to_string(),
            line,
            kind,
        },
        other => other,
    })
}

/// Reads every `*.txt` annotation file in `dir`, sorted by file name.
pub fn read_annotation_dir(dir: &Path) -> Result<Vec<ResumeAnnotationFile>, CorpusError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "txt"))
        .collect();
    paths.sort();
    paths.iter().map(|p| read_annotation_file(p)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentCount {
    pub doc_id: String,
    pub sentence_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub corpus_id: String,
    /// Seconds since the Unix epoch.
    pub created_unix: u64,
    pub documents: Vec<DocumentCount>,
    pub total_sentences: usize,
    pub label_histogram: BTreeMap<Label, usize>,
}

/// An assembled corpus: manifest plus the flat sentence table ordered by
/// `(doc_id, index)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub manifest: CorpusManifest,
    pub sentences: Vec<AnnotatedSentence>,
}

pub fn label_histogram<'a, I>(labels: I) -> BTreeMap<Label, usize>
where
    I: IntoIterator<Item = &'a Label>,
{
    let mut hist: BTreeMap<Label, usize> = Label::ALL.iter().map(|&l| (l, 0)).collect();
    for l in labels {
        *hist.entry(*l).or_default() += 1;
    }
    hist
}

pub fn assemble(
    files: Vec<ResumeAnnotationFile>,
    created_unix: u64,
) -> Result<Corpus, CorpusError> {
    let mut seen = HashSet::new();
    for f in &files {
        if !seen.insert(f.doc_id.clone()) {
            return Err(CorpusError::DuplicateDocId(f.doc_id.clone()));
        }
        f.validate()?;
    }
    let mut files = files;
    files.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));

    let documents = files
        .iter()
        .map(|f| DocumentCount {
            doc_id: f.doc_id.clone(),
            sentence_count: f.sentences.len(),
        })
        .collect();
    let sentences: Vec<AnnotatedSentence> = files.into_iter().flat_map(|f| f.sentences).collect();
    let table = sentence_table_string(&sentences);
    let digest = Sha256::digest(table.as_bytes());
    let corpus_id = digest[..8].iter().map(|b| format!("{b:02x}")).collect();

    let manifest = CorpusManifest {
        corpus_id,
        created_unix,
        documents,
        total_sentences: sentences.len(),
        label_histogram: label_histogram(sentences.iter().map(|s| &s.label)),
    };
    Ok(Corpus {
        manifest,
        sentences,
    })
}

/// `doc_id\tindex\tLABEL\ttext` per sentence.
pub fn sentence_table_string(sentences: &[AnnotatedSentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            s.doc_id,
            s.index,
            s.label.token(),
            sanitize_text(&s.text)
        ));
    }
    out
}

pub fn parse_sentence_table(name: &str, content: &str) -> Result<Vec<AnnotatedSentence>, CorpusError> {
    let err = |line: usize, kind| CorpusError::Format {
        file: name.to_string(),
        line,
        kind,
    };
    content
        .lines()
        .enumerate()
        .map(|(i, line)| {
            let mut parts = line.splitn(4, '\t');
            let (Some(doc_id), Some(index), Some(token), Some(text)) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(err(i + 1, FormatErrorKind::MissingTab));
            };
            let index = index
                .parse()
                .map_err(|_| err(i + 1, FormatErrorKind::BadField(format!("bad index `{index}`"))))?;
            let label = parse_label(token)
                .map_err(|_| err(i + 1, FormatErrorKind::UnknownLabel(token.to_string())))?;
            if text.trim().is_empty() {
                return Err(err(i + 1, FormatErrorKind::EmptyText));
            }
            Ok(AnnotatedSentence {
                doc_id: doc_id.to_string(),
                index,
                text: text.to_string(),
                label,
            })
        })
        .collect()
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SENTENCES_FILE: &str = "sentences.tsv";

impl Corpus {
    pub fn save(&self, dir: &Path) -> Result<(), CorpusError> {
        let table = dir.join(SENTENCES_FILE);
        fsutil::write_atomic(&table, sentence_table_string(&self.sentences).as_bytes())
            .map_err(io_err(&table))?;
        let manifest = dir.join(MANIFEST_FILE);
        fsutil::write_json(&manifest, &self.manifest).map_err(io_err(&manifest))
    }

    pub fn load(dir: &Path) -> Result<Self, CorpusError> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let raw = std::fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
        let manifest: CorpusManifest =
            serde_json::from_str(&raw).map_err(|source| CorpusError::Json {
                path: manifest_path.display().to_string(),
                source,
            })?;
        let table_path = dir.join(SENTENCES_FILE);
        let raw = std::fs::read_to_string(&table_path).map_err(io_err(&table_path))?;
        let sentences = parse_sentence_table(&table_path.display().to_string(), &raw)?;
        if sentences.len() != manifest.total_sentences {
            return Err(CorpusError::InvalidAnnotation {
                doc_id: manifest.corpus_id.clone(),
                reason: format!(
                    "manifest lists {} sentences, table has {}",
                    manifest.total_sentences,
                    sentences.len()
                ),
            });
        }
        Ok(Corpus {
            manifest,
            sentences,
        })
    }
}

/// Fraction of sentences per label; every label is present as a key.
pub fn class_distribution(labels: &[Label]) -> Result<BTreeMap<Label, f64>, CorpusError> {
    if labels.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let n = labels.len() as f64;
    Ok(label_histogram(labels)
        .into_iter()
        .map(|(l, c)| (l, c as f64 / n))
        .collect())
}

/// `LABEL\ttext` lines, the training-data format shared with external
/// trainers.
pub fn dataset_tsv<'a, I>(sentences: I) -> String
where
    I: IntoIterator<Item = &'a AnnotatedSentence>,
{
    let mut out = String::new();
    for s in sentences {
        out.push_str(s.label.token());
        out.push('\t');
        out.push_str(&sanitize_text(&s.text));
        out.push('\n');
    }
    out
}

/// Parses `LABEL\ttext` lines into `(text, label)` pairs.
pub fn parse_dataset_tsv(name: &str, content: &str) -> Result<Vec<(String, Label)>, CorpusError> {
    let file = ResumeAnnotationFile::parse(name, content)?;
    Ok(file.sentences.into_iter().map(|s| (s.text, s.label)).collect())
}
