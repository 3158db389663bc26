//! Best-effort PDF text extraction.
//!
//! Walks every stream object, inflates `FlateDecode` content and interprets
//! the text-showing operators in content-stream order. No font encoding maps
//! are consulted: string bytes are read as Latin-1, or UTF-16BE when they
//! carry a byte-order mark. Anything that cannot be read is reported and
//! skipped.

use std::io::Read;

use flate2::read::ZlibDecoder;

use super::{IngestError, SourceFormat};

/// Vertical moves smaller than this are treated as the same text line.
const SAME_LINE_EPSILON: f64 = 0.5;
/// `TJ` adjustments below this (thousandths of an em) read as a word gap.
const TJ_SPACE_THRESHOLD: f64 = -200.0;

pub(super) fn extract(bytes: &[u8], warnings: &mut Vec<String>) -> Result<String, IngestError> {
    let streams = find_streams(bytes);
    if streams.is_empty() && find(bytes, b" obj", 0).is_none() {
        return Err(IngestError::MalformedDocument {
            format: SourceFormat::Pdf,
            reason: "no objects found".into(),
        });
    }

    let mut blocks = Vec::new();
    for stream in streams {
        let label = stream.object_label();
        let dict = stream.dict;
        if contains(dict, b"/Image") {
            warnings.push(format!("skipped image stream {label}"));
            continue;
        }
        if contains(dict, b"/Length1") || contains(dict, b"/Length2") || contains(dict, b"/FontFile") {
            warnings.push(format!("skipped embedded font stream {label}"));
            continue;
        }
        if contains(dict, b"/XRef") || contains(dict, b"/ObjStm") {
            warnings.push(format!("skipped cross-reference or object stream {label}"));
            continue;
        }
        let data = match decode_stream(dict, stream.data) {
            Ok(d) => d,
            Err(reason) => {
                warnings.push(format!("skipped stream {label}: {reason}"));
                continue;
            }
        };
        if find(&data, b"BT", 0).is_none() {
            continue;
        }
        let text = interpret_content(&data);
        if !text.trim().is_empty() {
            blocks.push(text);
        }
    }
    if blocks.is_empty() {
        warnings.push("no extractable text".to_string());
    }
    Ok(blocks.join("\n"))
}

struct RawStream<'a> {
    object: Option<(u32, u32)>,
    dict: &'a [u8],
    data: &'a [u8],
}

impl RawStream<'_> {
    fn object_label(&self) -> String {
        match self.object {
            Some((num, gen)) => format!("in object {num} {gen}"),
            None => "in unnumbered object".to_string(),
        }
    }
}

fn find(haystack: &[u8], needle: &[u8], from: usize) -> Option<usize> {
    if from >= haystack.len() || needle.is_empty() {
        return None;
    }
    haystack[from..]
        .windows(needle.len())
        .position(|w| w == needle)
        .map(|p| p + from)
}

fn rfind(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).rposition(|w| w == needle)
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    find(haystack, needle, 0).is_some()
}

fn find_streams(bytes: &[u8]) -> Vec<RawStream<'_>> {
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(kw) = find(bytes, b"stream", pos) {
        // `endstream` also contains `stream`.
        if kw >= 3 && &bytes[kw - 3..kw] == b"end" {
            pos = kw + 6;
            continue;
        }
        let mut start = kw + 6;
        if bytes.get(start) == Some(&b'\r') {
            start += 1;
        }
        if bytes.get(start) == Some(&b'\n') {
            start += 1;
        }
        let header_start = rfind(&bytes[..kw], b"obj").map(|p| p + 3).unwrap_or(0);
        let dict = &bytes[header_start..kw];
        let object = object_number(&bytes[..header_start.saturating_sub(3)]);

        let end = match declared_length(dict) {
            Some(len) if start + len <= bytes.len() => start + len,
            _ => match find(bytes, b"endstream", start) {
                Some(e) => trim_eol(bytes, start, e),
                None => bytes.len(),
            },
        };
        out.push(RawStream {
            object,
            dict,
            data: &bytes[start..end],
        });
        pos = end.max(start);
    }
    out
}

fn trim_eol(bytes: &[u8], start: usize, mut end: usize) -> usize {
    if end > start && bytes[end - 1] == b'\n' {
        end -= 1;
    }
    if end > start && bytes[end - 1] == b'\r' {
        end -= 1;
    }
    end
}

/// Parses the `N G` that precedes an `obj` keyword.
fn object_number(prefix: &[u8]) -> Option<(u32, u32)> {
    let tail = std::str::from_utf8(&prefix[prefix.len().saturating_sub(32)..]).ok()?;
    let mut parts = tail.split_ascii_whitespace().rev();
    let gen = parts.next()?.parse().ok()?;
    let num = parts.next()?.parse().ok()?;
    Some((num, gen))
}

/// A direct `/Length N`; indirect `/Length N G R` yields `None`.
fn declared_length(dict: &[u8]) -> Option<usize> {
    let at = find(dict, b"/Length", 0)?;
    let rest = std::str::from_utf8(&dict[at + 7..]).ok()?;
    let rest = rest.trim_start();
    if !rest.starts_with(|c: char| c.is_ascii_digit()) {
        return None;
    }
    let mut tokens = rest.split(|c: char| c.is_ascii_whitespace() || c == '/' || c == '>');
    let n: usize = tokens.next()?.parse().ok()?;
    let mut following = rest
        .split_ascii_whitespace()
        .skip(1)
        .take(2);
    if let (Some(_), Some("R")) = (following.next(), following.next()) {
        return None;
    }
    Some(n)
}

fn decode_stream(dict: &[u8], data: &[u8]) -> Result<Vec<u8>, String> {
    if !contains(dict, b"/Filter") {
        return Ok(data.to_vec());
    }
    if contains(dict, b"/FlateDecode") || contains(dict, b"/Fl ") || contains(dict, b"/Fl/") {
        if contains(dict, b"/DecodeParms") {
            // Predictors only appear on image and xref data in practice.
            return Err("unsupported decode parameters".into());
        }
        let mut out = Vec::new();
        ZlibDecoder::new(data)
            .read_to_end(&mut out)
            .map_err(|e| format!("inflate failed: {e}"))?;
        return Ok(out);
    }
    let name = find(dict, b"/Filter", 0)
        .map(|p| {
            String::from_utf8_lossy(&dict[p + 7..])
                .trim()
                .split(|c: char| c.is_ascii_whitespace() || c == '>')
                .next()
                .unwrap_or("")
                .to_string()
        })
        .unwrap_or_default();
    Err(format!("unsupported filter {name}"))
}

#[derive(Debug, Clone)]
enum Operand {
    Number(f64),
    Str(Vec<u8>),
    Array(Vec<Operand>),
    ArrayStart,
    Other,
}

struct ContentLexer<'a> {
    data: &'a [u8],
    pos: usize,
}

enum Token {
    Operand(Operand),
    ArrayEnd,
    Operator(String),
}

fn is_delimiter(b: u8) -> bool {
    matches!(b, b'(' | b')' | b'<' | b'>' | b'[' | b']' | b'{' | b'}' | b'/' | b'%')
}

impl<'a> ContentLexer<'a> {
    fn new(data: &'a [u8]) -> Self {
        ContentLexer { data, pos: 0 }
    }

    fn peek(&self) -> Option<u8> {
        self.data.get(self.pos).copied()
    }

    fn next_token(&mut self) -> Option<Token> {
        loop {
            let b = self.peek()?;
            if b.is_ascii_whitespace() || b == 0 {
                self.pos += 1;
            } else if b == b'%' {
                while let Some(c) = self.peek() {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
        let b = self.peek()?;
        let token = match b {
            b'(' => {
                self.pos += 1;
                Token::Operand(Operand::Str(self.literal_string()))
            }
            b'<' if self.data.get(self.pos + 1) == Some(&b'<') => {
                self.pos += 2;
                Token::Operand(Operand::Other)
            }
            b'>' if self.data.get(self.pos + 1) == Some(&b'>') => {
                self.pos += 2;
                Token::Operand(Operand::Other)
            }
            b'<' => {
                self.pos += 1;
                Token::Operand(Operand::Str(self.hex_string()))
            }
            b'[' => {
                self.pos += 1;
                Token::Operand(Operand::ArrayStart)
            }
            b']' => {
                self.pos += 1;
                Token::ArrayEnd
            }
            b'/' => {
                self.pos += 1;
                self.regular_run();
                Token::Operand(Operand::Other)
            }
            b'+' | b'-' | b'.' | b'0'..=b'9' => {
                let word = self.regular_run();
                match word.parse::<f64>() {
                    Ok(n) => Token::Operand(Operand::Number(n)),
                    Err(_) => Token::Operand(Operand::Other),
                }
            }
            _ if is_delimiter(b) => {
                self.pos += 1;
                Token::Operand(Operand::Other)
            }
            _ => Token::Operator(self.regular_run()),
        };
        Some(token)
    }

    fn regular_run(&mut self) -> String {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_whitespace() || is_delimiter(c) || c == 0 {
                break;
            }
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.data[start..self.pos]).into_owned()
    }

    fn literal_string(&mut self) -> Vec<u8> {
        let mut out = Vec::new();
        let mut depth = 1usize;
        while let Some(c) = self.peek() {
            self.pos += 1;
            match c {
                b'\\' => {
                    let Some(e) = self.peek() else { break };
                    self.pos += 1;
                    match e {
                        b'n' => out.push(b'\n'),
                        b'r' => out.push(b'\r'),
                        b't' => out.push(b'\t'),
                        b'b' => out.push(0x08),
                        b'f' => out.push(0x0c),
                        b'\r' => {
                            if self.peek() == Some(b'\n') {
                                self.pos += 1;
                            }
                        }
                        b'\n' => {}
                        b'0'..=b'7' => {
                            let mut value = (e - b'0') as u32;
                            for _ in 0..2 {
                                match self.peek() {
                                    Some(d @ b'0'..=b'7') => {
                                        value = value * 8 + (d - b'0') as u32;
                                        self.pos += 1;
                                    }
                                    _ => break,
                                }
                            }
                            out.push((value & 0xff) as u8);
                        }
                        other => out.push(other),
                    }
                }
                b'(' => {
                    depth += 1;
                    out.push(c);
                }
                b')' => {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                    out.push(c);
                }
                _ => out.push(c),
            }
        }
        out
    }

    fn hex_string(&mut self) -> Vec<u8> {
        let mut digits = Vec::new();
        while let Some(c) = self.peek() {
            self.pos += 1;
            if c == b'>' {
                break;
            }
            if let Some(d) = (c as char).to_digit(16) {
                digits.push(d as u8);
            }
        }
        if digits.len() % 2 == 1 {
            digits.push(0);
        }
        digits.chunks(2).map(|p| p[0] << 4 | p[1]).collect()
    }
}

fn decode_pdf_string(bytes: &[u8]) -> String {
    if bytes.starts_with(&[0xfe, 0xff]) {
        let units: Vec<u16> = bytes[2..]
            .chunks(2)
            .filter(|c| c.len() == 2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect();
        return String::from_utf16_lossy(&units);
    }
    bytes.iter().map(|&b| b as char).collect()
}

#[derive(Default)]
struct TextState {
    out: String,
    line_y: f64,
    leading: f64,
    last_y: Option<f64>,
    pending_space: bool,
}

impl TextState {
    fn show(&mut self, text: &str) {
        if text.is_empty() {
            return;
        }
        match self.last_y {
            Some(y) if (y - self.line_y).abs() > SAME_LINE_EPSILON => self.out.push('\n'),
            Some(_) if self.pending_space && !self.out.ends_with(char::is_whitespace) => {
                self.out.push(' ')
            }
            _ => {}
        }
        self.pending_space = false;
        self.out.push_str(text);
        self.last_y = Some(self.line_y);
    }

    fn next_line(&mut self) {
        self.line_y -= if self.leading == 0.0 { 1.0 } else { self.leading };
    }
}

fn numbers(stack: &[Operand]) -> Vec<f64> {
    stack
        .iter()
        .filter_map(|o| match o {
            Operand::Number(n) => Some(*n),
            _ => None,
        })
        .collect()
}

fn last_string(stack: &[Operand]) -> Option<String> {
    stack.iter().rev().find_map(|o| match o {
        Operand::Str(s) => Some(decode_pdf_string(s)),
        _ => None,
    })
}

fn interpret_content(data: &[u8]) -> String {
    let mut lexer = ContentLexer::new(data);
    let mut stack: Vec<Operand> = Vec::new();
    let mut state = TextState::default();

    while let Some(token) = lexer.next_token() {
        match token {
            Token::Operand(op) => stack.push(op),
            Token::ArrayEnd => {
                let start = stack
                    .iter()
                    .rposition(|o| matches!(o, Operand::ArrayStart))
                    .unwrap_or(stack.len());
                let items = stack.split_off(start);
                stack.push(Operand::Array(items.into_iter().skip(1).collect()));
            }
            Token::Operator(op) => {
                let nums = numbers(&stack);
                match op.as_str() {
                    "BT" => state.line_y = 0.0,
                    "TL" => {
                        if let Some(&l) = nums.last() {
                            state.leading = l;
                        }
                    }
                    "Td" | "TD" => {
                        if let [.., tx, ty] = nums[..] {
                            if op == "TD" {
                                state.leading = -ty;
                            }
                            state.line_y += ty;
                            if tx != 0.0 {
                                state.pending_space = true;
                            }
                        }
                    }
                    "Tm" => {
                        if let [.., f] = nums[..] {
                            state.line_y = f;
                            state.pending_space = true;
                        }
                    }
                    "T*" => state.next_line(),
                    "Tj" => {
                        if let Some(s) = last_string(&stack) {
                            state.show(&s);
                        }
                    }
                    "'" | "\"" => {
                        state.next_line();
                        if let Some(s) = last_string(&stack) {
                            state.show(&s);
                        }
                    }
                    "TJ" => {
                        if let Some(Operand::Array(items)) = stack.last().cloned() {
                            for item in items {
                                match item {
                                    Operand::Str(s) => state.show(&decode_pdf_string(&s)),
                                    Operand::Number(n) if n < TJ_SPACE_THRESHOLD => {
                                        state.pending_space = true
                                    }
                                    _ => {}
                                }
                            }
                        }
                    }
                    "ET" => state.pending_space = true,
                    _ => {}
                }
                stack.clear();
            }
        }
    }
    state.out
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use flate2::write::ZlibEncoder;
    use flate2::Compression;

    use super::*;
    use crate::ingest::{extract_text, RawDocument};

    fn pdf_with_stream(dict_extra: &str, data: &[u8]) -> Vec<u8> {
        let mut out = b"%PDF-1.4\n1 0 obj\n<< /Type /Catalog >>\nendobj\n".to_vec();
        out.extend_from_slice(
            format!("4 0 obj\n<< /Length {}{} >>\nstream\n", data.len(), dict_extra).as_bytes(),
        );
        out.extend_from_slice(data);
        out.extend_from_slice(b"\nendstream\nendobj\ntrailer\n<< /Root 1 0 R >>\n%%EOF\n");
        out
    }

    #[test]
    fn plain_content_stream_lines() {
        let content = b"BT /F1 12 Tf 72 720 Td (John Doe) Tj 0 -14 Td (Software Engineer) Tj ET";
        let bytes = pdf_with_stream("", content);
        let doc = RawDocument::detect("cv.pdf", bytes);
        let out = extract_text(&doc).unwrap();
        assert_eq!(out.text, "John Doe\nSoftware Engineer");
    }

    #[test]
    fn flate_stream_and_tj_arrays() {
        let content = b"BT 72 700 Td [(Py) 10 (thon)-300 (Rust)] TJ T* (next \\(line\\)) Tj ET";
        let mut enc = ZlibEncoder::new(Vec::new(), Compression::default());
        enc.write_all(content).unwrap();
        let bytes = pdf_with_stream(" /Filter /FlateDecode", &enc.finish().unwrap());
        let mut warnings = Vec::new();
        let text = extract(&bytes, &mut warnings).unwrap();
        assert_eq!(text, "Python Rust\nnext (line)");
        assert!(warnings.is_empty(), "{warnings:?}");
    }

    #[test]
    fn unsupported_filter_is_warned() {
        let bytes = pdf_with_stream(" /Filter /LZWDecode", b"garbage");
        let mut warnings = Vec::new();
        let text = extract(&bytes, &mut warnings).unwrap();
        assert_eq!(text, "");
        assert!(warnings.iter().any(|w| w.contains("LZWDecode") && w.contains("4 0")));
        assert!(warnings.iter().any(|w| w == "no extractable text"));
    }

    #[test]
    fn image_stream_is_skipped() {
        let bytes = pdf_with_stream(" /Subtype /Image", b"\x00\x01");
        let mut warnings = Vec::new();
        extract(&bytes, &mut warnings).unwrap();
        assert!(warnings[0].starts_with("skipped image stream"));
    }

    #[test]
    fn utf16_and_hex_strings() {
        let content = b"BT <FEFF00E9> Tj ( ) Tj <4869> Tj ET";
        assert_eq!(interpret_content(content), "\u{e9} Hi");
    }

    #[test]
    fn garbage_without_objects_is_malformed() {
        let mut warnings = Vec::new();
        assert!(extract(b"%PDF-1.4 nothing here", &mut warnings).is_err());
    }
}
