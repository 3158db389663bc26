//! Source-format detection and plain-text extraction for raw resumes.
//!
//! Every extractor funnels its output through [`normalize_text`], so the
//! segmenter only ever sees LF-terminated, NFC-normalized text.

mod docx;
mod pdf;

use std::fmt;
use std::io::{Cursor, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Minimum share of printable characters for a byte blob to count as text.
pub const PRINTABLE_THRESHOLD: f64 = 0.9;

const PDF_MAGIC: &[u8] = b"%PDF";
const ZIP_MAGIC: &[u8] = b"PK\x03\x04";
const DOCX_MAIN_PART: &str = "word/document.xml";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed {format} document: {reason}")]
    MalformedDocument { format: SourceFormat, reason: String },
    #[error("unsupported format for document `{0}`")]
    UnsupportedFormat(String),
    #[error("empty source id")]
    EmptySourceId,
    #[error("duplicate source id `{0}` in batch")]
    DuplicateSourceId(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl IngestError {
    fn malformed(format: SourceFormat, reason: impl Into<String>) -> Self {
        IngestError::MalformedDocument {
            format,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Txt,
    Docx,
    Pdf,
    Unknown,
}

impl fmt::Display for SourceFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SourceFormat::Txt => "txt",
            SourceFormat::Docx => "docx",
            SourceFormat::Pdf => "pdf",
            SourceFormat::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub source_id: String,
    pub format: SourceFormat,
    pub bytes: Vec<u8>,
}

impl RawDocument {
    /// Builds a document and runs format detection using `source_id` as the name hint.
    pub fn detect(source_id: impl Into<String>, bytes: Vec<u8>) -> Self {
        let source_id = source_id.into();
        let format = if bytes.is_empty() {
            // Empty files carry no magic; an empty name-hinted text file is still text.
            if has_extension(&source_id, &["pdf", "docx", "doc"]) {
                SourceFormat::Unknown
            } else {
                SourceFormat::Txt
            }
        } else {
            detect_format(&bytes, &source_id)
        };
        RawDocument {
            source_id,
            format,
            bytes,
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, IngestError> {
        let bytes = std::fs::read(path).map_err(|source| IngestError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        Ok(RawDocument::detect(name, bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedDocument {
    pub doc_id: String,
    pub text: String,
    pub source_format: SourceFormat,
    pub extraction_warnings: Vec<String>,
}

impl NormalizedDocument {
    /// Wraps already-normalized text, e.g. when reloading from the corpus store.
    pub fn from_text(doc_id: impl Into<String>, text: &str) -> Self {
        NormalizedDocument {
            doc_id: doc_id.into(),
            text: normalize_text(text),
            source_format: SourceFormat::Txt,
            extraction_warnings: Vec::new(),
        }
    }
}

/// Detects the format of `bytes`. Magic bytes win over `name_hint`; the hint
/// only decides between `Txt` and `Unknown`: printable content whose name
/// claims a binary document format (`.pdf`, `.docx`, `.doc`) is `Unknown`.
pub fn detect_format(bytes: &[u8], name_hint: &str) -> SourceFormat {
    if bytes.starts_with(PDF_MAGIC) {
        return SourceFormat::Pdf;
    }
    if bytes.starts_with(ZIP_MAGIC) && zip_has_entry(bytes, DOCX_MAIN_PART) {
        return SourceFormat::Docx;
    }
    if bytes.is_empty() || printable_ratio(bytes) < PRINTABLE_THRESHOLD {
        return SourceFormat::Unknown;
    }
    if has_extension(name_hint, &["pdf", "docx", "doc"]) {
        SourceFormat::Unknown
    } else {
        SourceFormat::Txt
    }
}

fn has_extension(name: &str, exts: &[&str]) -> bool {
    Path::new(name)
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| exts.iter().any(|x| e.eq_ignore_ascii_case(x)))
        .unwrap_or(false)
}

fn zip_has_entry(bytes: &[u8], entry: &str) -> bool {
    match zip::ZipArchive::new(Cursor::new(bytes)) {
        Ok(archive) => archive.file_names().any(|n| n == entry),
        Err(_) => false,
    }
}

fn is_printable(c: char) -> bool {
    matches!(c, '\n' | '\r' | '\t') || !c.is_control()
}

/// Share of printable characters under UTF-8 decoding, or Latin-1 when the
/// bytes are not valid UTF-8.
fn printable_ratio(bytes: &[u8]) -> f64 {
    let (printable, total) = match std::str::from_utf8(bytes) {
        Ok(s) => s.chars().fold((0usize, 0usize), |(p, t), c| {
            (p + is_printable(c) as usize, t + 1)
        }),
        Err(_) => bytes.iter().fold((0usize, 0usize), |(p, t), &b| {
            (p + is_printable(b as char) as usize, t + 1)
        }),
    };
    if total == 0 {
        0.0
    } else {
        printable as f64 / total as f64
    }
}

/// Extracts and normalizes the text of one document.
pub fn extract_text(doc: &RawDocument) -> Result<NormalizedDocument, IngestError> {
    if doc.source_id.is_empty() {
        return Err(IngestError::EmptySourceId);
    }
    let mut warnings = Vec::new();
    let raw = match doc.format {
        SourceFormat::Txt => decode_text(&doc.bytes, &mut warnings),
        SourceFormat::Docx => docx::extract(&doc.bytes)?,
        SourceFormat::Pdf => pdf::extract(&doc.bytes, &mut warnings)?,
        SourceFormat::Unknown => {
            return Err(IngestError::UnsupportedFormat(doc.source_id.clone()))
        }
    };
    if raw.contains('\0') {
        warnings.push("removed NUL characters".to_string());
    }
    let text = normalize_text(&raw);
    if text.is_empty() {
        warnings.push("empty document".to_string());
    }
    Ok(NormalizedDocument {
        doc_id: doc_id_from_source(&doc.source_id),
        text,
        source_format: doc.format,
        extraction_warnings: warnings,
    })
}

/// Strips the file extension from a source id: `jane.docx` becomes `jane`.
pub fn doc_id_from_source(source_id: &str) -> String {
    let path = Path::new(source_id);
    match (path.file_stem(), path.extension()) {
        (Some(stem), Some(_)) if !stem.is_empty() => stem.to_string_lossy().into_owned(),
        _ => source_id.to_string(),
    }
}

/// Decodes text bytes. Valid UTF-8 passes through. Bytes with no valid
/// multi-byte UTF-8 sequence are read as Latin-1; otherwise invalid runs are
/// dropped and each run is reported.
pub(crate) fn decode_text(bytes: &[u8], warnings: &mut Vec<String>) -> String {
    if let Ok(s) = std::str::from_utf8(bytes) {
        return s.to_string();
    }
    let has_multibyte = bytes
        .utf8_chunks()
        .any(|chunk| !chunk.valid().is_ascii());
    if !has_multibyte {
        warnings.push("decoded as Latin-1".to_string());
        return bytes.iter().map(|&b| b as char).collect();
    }
    let mut out = String::with_capacity(bytes.len());
    let mut offset = 0usize;
    for chunk in bytes.utf8_chunks() {
        out.push_str(chunk.valid());
        offset += chunk.valid().len();
        if !chunk.invalid().is_empty() {
            warnings.push(format!(
                "dropped {} undecodable byte(s) at offset {}",
                chunk.invalid().len(),
                offset
            ));
            offset += chunk.invalid().len();
        }
    }
    out
}

/// Canonicalizes text for segmentation: no NUL, NFC, LF line endings, tabs as
/// spaces, no trailing whitespace per line, at most one blank line in a row,
/// and no leading or trailing blank lines.
pub fn normalize_text(text: &str) -> String {
    // NUL goes first: dropping it after NFC could bring a base character
    // and a combining mark together and break idempotence.
    let nfc: String = text.chars().filter(|&c| c != '\0').nfc().collect();
    let unified = nfc.replace("\r\n", "\n").replace('\r', "\n").replace('\t', " ");

    let mut out = String::with_capacity(unified.len());
    let mut pending_blank = 0usize;
    let mut seen_content = false;
    for line in unified.split('\n') {
        let line = line.trim_end();
        if line.is_empty() {
            pending_blank += 1;
            continue;
        }
        if seen_content {
            // n blank lines between two content lines = n + 1 LFs, capped at 2.
            let newlines = (pending_blank + 1).min(2);
            out.extend(std::iter::repeat_n('\n', newlines));
        }
        out.push_str(line);
        seen_content = true;
        pending_blank = 0;
    }
    out
}

/// Reads a whole ingestion batch, enforcing unique non-empty source ids.
pub fn read_batch(dir: &Path) -> Result<Vec<RawDocument>, IngestError> {
    let io_err = |source| IngestError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io_err)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .filter(|p| !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.')))
        .collect();
    paths.sort();
    let mut seen = std::collections::HashSet::new();
    let mut docs = Vec::with_capacity(paths.len());
    for path in paths {
        let doc = RawDocument::from_path(&path)?;
        if doc.source_id.is_empty() {
            return Err(IngestError::EmptySourceId);
        }
        if !seen.insert(doc_id_from_source(&doc.source_id)) {
            return Err(IngestError::DuplicateSourceId(doc.source_id));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub(crate) fn read_zip_entry(bytes: &[u8], entry: &str) -> Result<Vec<u8>, IngestError> {
    let mut archive = zip::ZipArchive::new(Cursor::new(bytes))
        .map_err(|e| IngestError::malformed(SourceFormat::Docx, e.to_string()))?;
    let mut file = archive
        .by_name(entry)
        .map_err(|e| IngestError::malformed(SourceFormat::Docx, format!("{entry}: {e}")))?;
    let mut out = Vec::new();
    file.read_to_end(&mut out)
        .map_err(|e| IngestError::malformed(SourceFormat::Docx, format!("{entry}: {e}")))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pdf_magic_beats_txt_hint() {
        assert_eq!(detect_format(b"%PDF-1.4\n...", "a.txt"), SourceFormat::Pdf);
    }

    #[test]
    fn ascii_text_is_txt() {
        assert_eq!(
            detect_format(b"John Doe\nEngineer", "resume.txt"),
            SourceFormat::Txt
        );
    }

    #[test]
    fn zip_without_document_part_is_not_docx() {
        let bytes = docx::tests::zip_with(&[("other.xml", "<x/>")]);
        assert_eq!(detect_format(&bytes, "a.docx"), SourceFormat::Unknown);
    }

    #[test]
    fn binary_blob_is_unknown() {
        let bytes: Vec<u8> = (0u8..32).cycle().take(200).collect();
        assert_eq!(detect_format(&bytes, "x.txt"), SourceFormat::Unknown);
    }

    #[test]
    fn text_named_as_pdf_is_unknown() {
        assert_eq!(detect_format(b"plain words", "cv.pdf"), SourceFormat::Unknown);
    }

    #[test]
    fn latin1_text_is_txt() {
        assert_eq!(detect_format(b"Jos\xe9 Garc\xeda", "cv"), SourceFormat::Txt);
    }

    #[test]
    fn crlf_txt_is_normalized() {
        let doc = RawDocument::detect("a.txt", b"John Doe\r\nEngineer".to_vec());
        let out = extract_text(&doc).unwrap();
        assert_eq!(out.text, "John Doe\nEngineer");
        assert_eq!(out.doc_id, "a");
        assert!(out.extraction_warnings.is_empty());
    }

    #[test]
    fn empty_txt_warns() {
        let doc = RawDocument::detect("empty.txt", Vec::new());
        assert_eq!(doc.format, SourceFormat::Txt);
        let out = extract_text(&doc).unwrap();
        assert_eq!(out.text, "");
        assert_eq!(out.extraction_warnings, vec!["empty document".to_string()]);
    }

    #[test]
    fn unknown_is_rejected() {
        let doc = RawDocument {
            source_id: "x.bin".into(),
            format: SourceFormat::Unknown,
            bytes: vec![0, 1, 2],
        };
        assert!(matches!(
            extract_text(&doc),
            Err(IngestError::UnsupportedFormat(_))
        ));
    }

    #[test]
    fn latin1_fallback_decodes_every_byte() {
        let mut w = Vec::new();
        assert_eq!(decode_text(b"Jos\xe9", &mut w), "José");
        assert_eq!(w, vec!["decoded as Latin-1".to_string()]);
    }

    #[test]
    fn mixed_invalid_utf8_runs_are_dropped() {
        let mut w = Vec::new();
        let s = decode_text("né\u{0}".as_bytes().iter().copied().chain([0xff, b'x']).collect::<Vec<_>>().as_slice(), &mut w);
        assert_eq!(s, "né\u{0}x");
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("offset 4"), "{w:?}");
    }

    #[test]
    fn normalize_collapses_blank_runs() {
        assert_eq!(normalize_text("a\r\n\r\n\r\n\r\nb"), "a\n\nb");
    }

    #[test]
    fn normalize_tabs_then_trailing_strip() {
        // "a \t b  \n": tab -> space gives "a   b  \n"; trailing strip and
        // trailing blank-line removal leave "a   b".
        assert_eq!(normalize_text("a \t b  \n"), "a   b");
    }

    #[test]
    fn normalize_empty() {
        assert_eq!(normalize_text(""), "");
        assert_eq!(normalize_text(" \n\t\n"), "");
    }

    #[test]
    fn normalize_keeps_single_blank_line_and_indent() {
        assert_eq!(normalize_text("\n\n  a\n\nb\n"), "  a\n\nb");
        assert_eq!(normalize_text("a\n\nb"), "a\n\nb");
        assert_eq!(normalize_text("a\nb"), "a\nb");
    }

    #[test]
    fn normalize_applies_nfc_and_drops_nul() {
        assert_eq!(normalize_text("e\u{301}\0x"), "\u{e9}x");
        assert_eq!(normalize_text("A\0\u{301}"), "\u{c1}");
    }

    #[test]
    fn doc_id_strips_extension() {
        assert_eq!(doc_id_from_source("jane.docx"), "jane");
        assert_eq!(doc_id_from_source("README"), "README");
        assert_eq!(doc_id_from_source(".hidden"), ".hidden");
    }
}
