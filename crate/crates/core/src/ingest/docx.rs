use quick_xml::events::Event;
use quick_xml::Reader;

use super::{read_zip_entry, IngestError, SourceFormat, DOCX_MAIN_PART};

/// Paragraph texts of `word/document.xml` in document order, joined by LF.
pub(super) fn extract(bytes: &[u8]) -> Result<String, IngestError> {
    let xml = read_zip_entry(bytes, DOCX_MAIN_PART)?;
    paragraphs_from_xml(&xml).map(|ps| ps.join("\n"))
}

fn paragraphs_from_xml(xml: &[u8]) -> Result<Vec<String>, IngestError> {
    let malformed = |e: String| IngestError::MalformedDocument {
        format: SourceFormat::Docx,
        reason: e,
    };
    let mut reader = Reader::from_reader(xml);
    let mut buf = Vec::new();
    let mut paragraphs = Vec::new();
    let mut current = String::new();
    let mut in_paragraph = 0usize;
    let mut in_text = false;

    loop {
        match reader.read_event_into(&mut buf) {
            Ok(Event::Start(e)) => match e.local_name().as_ref() {
                b"p" => in_paragraph += 1,
                b"t" if in_paragraph > 0 => in_text = true,
                _ => {}
            },
            Ok(Event::Empty(e)) => match e.local_name().as_ref() {
                b"tab" if in_paragraph > 0 => current.push('\t'),
                b"br" | b"cr" if in_paragraph > 0 => current.push('\n'),
                // A self-closed paragraph is an empty line.
                b"p" => paragraphs.push(String::new()),
                _ => {}
            },
            Ok(Event::Text(t)) if in_text => {
                let text = t.unescape().map_err(|e| malformed(e.to_string()))?;
                current.push_str(&text);
            }
            Ok(Event::CData(t)) if in_text => {
                current.push_str(&String::from_utf8_lossy(&t));
            }
            Ok(Event::End(e)) => match e.local_name().as_ref() {
                b"t" => in_text = false,
                b"p" if in_paragraph > 0 => {
                    in_paragraph -= 1;
                    paragraphs.push(std::mem::take(&mut current));
                }
                _ => {}
            },
            Ok(Event::Eof) => break,
            Ok(_) => {}
            Err(e) => return Err(malformed(e.to_string())),
        }
        buf.clear();
    }
    if in_paragraph > 0 {
        return Err(malformed("unterminated paragraph".into()));
    }
    Ok(paragraphs)
}

#[cfg(test)]
pub(crate) mod tests {
    use std::io::Write;

    use super::*;
    use crate::ingest::{detect_format, extract_text, RawDocument};

    pub(crate) fn zip_with(entries: &[(&str, &str)]) -> Vec<u8> {
        let mut out = std::io::Cursor::new(Vec::new());
        {
            let mut w = zip::ZipWriter::new(&mut out);
            let opts = zip::write::SimpleFileOptions::default();
            for (name, body) in entries {
                w.start_file(*name, opts).unwrap();
                w.write_all(body.as_bytes()).unwrap();
            }
            w.finish().unwrap();
        }
        out.into_inner()
    }

    fn document(body: &str) -> String {
        format!(
            r#"<?xml version="1.0" encoding="UTF-8" standalone="yes"?>
<w:document xmlns:w="http://schemas.openxmlformats.org/wordprocessingml/2006/main"><w:body>{body}</w:body></w:document>"#
        )
    }

    #[test]
    fn two_paragraphs_join_with_lf() {
        let xml = document("<w:p><w:r><w:t>A</w:t></w:r></w:p><w:p><w:r><w:t>B</w:t></w:r></w:p>");
        let bytes = zip_with(&[("word/document.xml", &xml)]);
        assert_eq!(detect_format(&bytes, "cv.docx"), SourceFormat::Docx);
        let doc = RawDocument::detect("cv.docx", bytes);
        assert_eq!(extract_text(&doc).unwrap().text, "A\nB");
    }

    #[test]
    fn runs_concatenate_and_markup_is_stripped() {
        let xml = document(
            r#"<w:p><w:pPr><w:pStyle w:val="Title"/></w:pPr><w:r><w:rPr><w:b/></w:rPr><w:t>Jane</w:t></w:r><w:r><w:t xml:space="preserve"> Doe &amp; Co</w:t></w:r></w:p>
<w:tbl><w:tr><w:tc><w:p><w:r><w:t>Cell</w:t></w:r><w:r><w:tab/><w:t>x</w:t></w:r></w:p></w:tc></w:tr></w:tbl>"#,
        );
        let paras = paragraphs_from_xml(xml.as_bytes()).unwrap();
        assert_eq!(paras, vec!["Jane Doe & Co".to_string(), "Cell\tx".to_string()]);
    }

    #[test]
    fn truncated_archive_is_malformed() {
        let xml = document("<w:p><w:r><w:t>A</w:t></w:r></w:p>");
        let mut bytes = zip_with(&[("word/document.xml", &xml)]);
        bytes.truncate(bytes.len() / 2);
        let doc = RawDocument {
            source_id: "t.docx".into(),
            format: SourceFormat::Docx,
            bytes,
        };
        assert!(matches!(
            extract_text(&doc),
            Err(IngestError::MalformedDocument { .. })
        ));
    }

    #[test]
    fn broken_xml_is_malformed() {
        let bytes = zip_with(&[("word/document.xml", "<w:document><w:p><w:t>A</w:p>")]);
        let doc = RawDocument {
            source_id: "b.docx".into(),
            format: SourceFormat::Docx,
            bytes,
        };
        assert!(extract_text(&doc).is_err());
    }
}
