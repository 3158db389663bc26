//! Template-generated resumes and sentence corpora with known labels.
//!
//! Used for the bundled fixtures, the test suites and desk-scale
//! experiments. Each label draws from its own templates and vocabulary, so a
//! noise-free corpus is linearly separable; `noise` swaps a share of
//! sentence texts for another label's text to cap achievable accuracy.

use std::io::Write;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AnnotatedSentence, Label, ResumeAnnotationFile};
use crate::fsutil;

/// Label shares with Experience at one half and Skill, Object and
/// Qualification at 7%, 3% and 1%; the remaining 39% is split evenly over
/// PersonalInfo, Summary and Education.
pub const PAPER_PROPORTIONS: [(Label, f64); Label::COUNT] = [
    (Label::Experience, 0.50),
    (Label::PersonalInfo, 0.13),
    (Label::Summary, 0.13),
    (Label::Education, 0.13),
    (Label::Qualification, 0.01),
    (Label::Skill, 0.07),
    (Label::Object, 0.03),
];

const FIRST: &[&str] = &["Jane", "John", "Maria", "Wei", "Amara", "Lucas", "Priya", "Omar", "Sofia", "Kenji"];
const LAST: &[&str] = &["Doe", "Smith", "Garcia", "Chen", "Okafor", "Silva", "Patel", "Haddad", "Rossi", "Tanaka"];
const CITY: &[&str] = &["Springfield", "Riverton", "Lakeside", "Fairview", "Brookfield", "Greenville"];
const STREET: &[&str] = &["Elm Street", "Maple Avenue", "Oak Road", "Cedar Lane", "Pine Court"];

const EXP_VERB: &[&str] = &["Developed", "Led", "Managed", "Designed", "Implemented", "Maintained", "Coordinated", "Delivered", "Supervised", "Optimized"];
const EXP_OBJECT: &[&str] = &[
    "payment processing services", "a team of six engineers", "warehouse logistics workflows",
    "customer onboarding campaigns", "quarterly budget forecasts", "inventory tracking dashboards",
    "vendor contract negotiations", "nightly data pipelines", "regional sales operations",
    "clinical trial scheduling",
];
const COMPANY: &[&str] = &["Northwind Traders", "Contoso Partners", "Globex Corporation", "Initech", "Umbrella Health", "Stark Logistics", "Wayne Retail"];

const SUM_ADJ: &[&str] = &["Motivated", "Detail oriented", "Results driven", "Versatile", "Passionate", "Dependable"];
const ROLE: &[&str] = &["software engineer", "accountant", "nurse", "project manager", "data analyst", "marketing specialist", "teacher"];
const FIELD: &[&str] = &["healthcare", "finance", "retail", "education", "manufacturing", "hospitality"];
const SUM_TRAIT: &[&str] = &["strong communication", "excellent teamwork", "creative problem solving", "attention to quality", "a calm demeanor"];

const DEGREE: &[&str] = &["Bachelor of Science", "Bachelor of Arts", "Master of Science", "Master of Business Administration", "Associate Degree"];
const MAJOR: &[&str] = &["Computer Science", "Nursing", "Economics", "Mechanical Engineering", "Psychology", "Accounting"];
const UNIVERSITY: &[&str] = &["State University", "Riverside College", "Northern Institute of Technology", "Lakeside University", "Central Polytechnic"];

const CERT: &[&str] = &["Project Management Professional", "Certified Public Accountant", "Registered Nurse", "AWS Solutions Architect", "Six Sigma Green Belt", "Cisco CCNA"];
const LICENSE_BODY: &[&str] = &["licensing board", "credential registry", "accreditation council"];

const SKILLS: &[&str] = &["Python", "SQL", "Excel", "Java", "Tableau", "Salesforce", "Photoshop", "Kubernetes", "QuickBooks", "Rust", "Spanish", "Linux"];

const OBJ_GOAL: &[&str] = &[
    "grow into a leadership role", "contribute to a mission driven organization",
    "apply my analytical abilities", "build a long term career", "expand my technical expertise",
];

fn pick<'a>(rng: &mut ChaCha8Rng, items: &'a [&'a str]) -> &'a str {
    items.choose(rng).copied().unwrap_or("")
}

/// One sentence of `label`. The text never contains sentence punctuation
/// followed by whitespace, so it survives segmentation as a single sentence.
pub fn sentence(label: Label, rng: &mut ChaCha8Rng) -> String {
    let first = pick(rng, FIRST);
    let last = pick(rng, LAST);
    match label {
        Label::Experience => match rng.random_range(0..3) {
            0 => format!("{} {} at {}", pick(rng, EXP_VERB), pick(rng, EXP_OBJECT), pick(rng, COMPANY)),
            1 => format!(
                "{} {} for {} months",
                pick(rng, EXP_VERB),
                pick(rng, EXP_OBJECT),
                rng.random_range(3..48)
            ),
            _ => format!(
                "{} {} from {} to {}",
                pick(rng, COMPANY),
                pick(rng, ROLE),
                rng.random_range(2005..2015),
                rng.random_range(2015..2024)
            ),
        },
        Label::PersonalInfo => match rng.random_range(0..4) {
            0 => format!("{first} {last}"),
            1 => format!(
                "Email: {}.{}@example.com",
                first.to_lowercase(),
                last.to_lowercase()
            ),
            2 => format!(
                "Phone: +1 555 {:03} {:04}",
                rng.random_range(0..1000),
                rng.random_range(0..10000)
            ),
            _ => format!(
                "Address: {} {}, {}",
                rng.random_range(1..300),
                pick(rng, STREET),
                pick(rng, CITY)
            ),
        },
        Label::Summary => match rng.random_range(0..2) {
            0 => format!(
                "{} {} with {} years in {}",
                pick(rng, SUM_ADJ),
                pick(rng, ROLE),
                rng.random_range(2..20),
                pick(rng, FIELD)
            ),
            _ => format!(
                "{} professional known for {}",
                pick(rng, SUM_ADJ),
                pick(rng, SUM_TRAIT)
            ),
        },
        Label::Education => match rng.random_range(0..2) {
            0 => format!(
                "{} in {}, {}, {}",
                pick(rng, DEGREE),
                pick(rng, MAJOR),
                pick(rng, UNIVERSITY),
                rng.random_range(1995..2024)
            ),
            _ => format!(
                "Graduated from {} with honors in {}",
                pick(rng, UNIVERSITY),
                pick(rng, MAJOR)
            ),
        },
        Label::Qualification => match rng.random_range(0..2) {
            0 => format!("{} certificate, {}", pick(rng, CERT), rng.random_range(2010..2024)),
            _ => format!(
                "Credential {} issued by the {}",
                pick(rng, CERT),
                pick(rng, LICENSE_BODY)
            ),
        },
        Label::Skill => {
            let mut chosen: Vec<&str> = SKILLS.choose_multiple(rng, 3).copied().collect();
            chosen.sort_unstable();
            match rng.random_range(0..2) {
                0 => format!("Skills: {}", chosen.join(", ")),
                _ => format!("Proficient in {} and {}", chosen[0], chosen[1]),
            }
        }
        Label::Object => format!("Seeking a {} position to {}", pick(rng, ROLE), pick(rng, OBJ_GOAL)),
    }
}

/// Exact per-label counts for `n` sentences by largest remainder over the
/// given shares (ties to the lower label ordinal).
pub fn label_counts(n: usize, proportions: &[(Label, f64); Label::COUNT]) -> [usize; Label::COUNT] {
    let total: f64 = proportions.iter().map(|p| p.1).sum();
    let mut counts = [0usize; Label::COUNT];
    let mut fracs = [0f64; Label::COUNT];
    for &(label, share) in proportions {
        let q = n as f64 * share / total;
        let q = if (q - q.round()).abs() < 1e-9 { q.round() } else { q };
        counts[label.ordinal()] = q.floor() as usize;
        fracs[label.ordinal()] = q - q.floor();
    }
    let left = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..Label::COUNT).collect();
    order.sort_by(|&a, &b| fracs[b].total_cmp(&fracs[a]).then(a.cmp(&b)));
    for &k in order.iter().take(left) {
        counts[k] += 1;
    }
    counts
}

/// A flat corpus of `n` sentences with exact label proportions, grouped into
/// documents of `per_doc` sentences.
pub fn corpus(
    n: usize,
    proportions: &[(Label, f64); Label::COUNT],
    per_doc: usize,
    noise: f64,
    seed: u64,
) -> Vec<AnnotatedSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = label_counts(n, proportions);
    let mut labels: Vec<Label> = Label::ALL
        .iter()
        .flat_map(|&l| std::iter::repeat_n(l, counts[l.ordinal()]))
        .collect();
    rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);
    let per_doc = per_doc.max(1);
    labels
        .into_iter()
        .enumerate()
        .map(|(i, label)| {
            let source = if noise > 0.0 && rng.random_bool(noise.min(1.0)) {
                Label::ALL[rng.random_range(0..Label::COUNT)]
            } else {
                label
            };
            AnnotatedSentence {
                doc_id: format!("doc{:05}", i / per_doc),
                index: i % per_doc,
                text: sentence(source, &mut rng),
                label,
            }
        })
        .collect()
}

/// A generated resume: its text and the expected `(sentence, label)` list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticResume {
    pub doc_id: String,
    pub lines: Vec<String>,
    pub gold: Vec<(String, Label)>,
}

impl SyntheticResume {
    pub fn text(&self) -> String {
        let mut s = self.lines.join("\n");
        s.push('\n');
        s
    }

    pub fn annotation(&self) -> ResumeAnnotationFile {
        ResumeAnnotationFile::from_labeled(self.doc_id.clone(), self.gold.iter().map(|(t, l)| (t.as_str(), *l)))
    }
}

/// A line-structured resume with section headers, bullets and some lines
/// carrying two sentences.
pub fn resume(doc_id: &str, rng: &mut ChaCha8Rng) -> SyntheticResume {
    let mut r = SyntheticResume {
        doc_id: doc_id.to_string(),
        lines: Vec::new(),
        gold: Vec::new(),
    };
    let plain = |r: &mut SyntheticResume, text: String, label: Label| {
        r.lines.push(text.clone());
        r.gold.push((text, label));
    };
    let first = pick(rng, FIRST);
    let last = pick(rng, LAST);
    plain(&mut r, format!("{first} {last}"), Label::PersonalInfo);
    for _ in 0..rng.random_range(1..3) {
        let s = sentence(Label::PersonalInfo, rng);
        plain(&mut r, s, Label::PersonalInfo);
    }
    if rng.random_bool(0.5) {
        let s = format!("{}.", sentence(Label::Object, rng));
        plain(&mut r, s, Label::Object);
    }
    r.lines.push(String::new());
    plain(&mut r, "Summary".into(), Label::Summary);
    let s = format!("{}.", sentence(Label::Summary, rng));
    plain(&mut r, s, Label::Summary);

    r.lines.push(String::new());
    plain(&mut r, "Work Experience".into(), Label::Experience);
    for _ in 0..rng.random_range(5..10) {
        let a = format!("{}.", sentence(Label::Experience, rng));
        if rng.random_bool(0.3) {
            let b = format!("{}.", sentence(Label::Experience, rng));
            r.lines.push(format!("• {a} {b}"));
            r.gold.push((a, Label::Experience));
            r.gold.push((b, Label::Experience));
        } else {
            r.lines.push(format!("• {a}"));
            r.gold.push((a, Label::Experience));
        }
    }

    r.lines.push(String::new());
    plain(&mut r, "Education".into(), Label::Education);
    for _ in 0..rng.random_range(1..3) {
        let s = sentence(Label::Education, rng);
        plain(&mut r, s, Label::Education);
    }
    if rng.random_bool(0.3) {
        let s = sentence(Label::Qualification, rng);
        r.lines.push(format!("- {s}"));
        r.gold.push((s, Label::Qualification));
    }
    r.lines.push(String::new());
    plain(&mut r, "Skills".into(), Label::Skill);
    let s = sentence(Label::Skill, rng);
    plain(&mut r, s, Label::Skill);
    r
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// A minimal `.docx` holding one paragraph per line.
pub fn docx_bytes(lines: &[String]) -> Vec<u8> {
    let body: String = lines
        .iter()
        .map(|l| format!("<w:p><w:r><w:t xml:space=\"preserve\">{}</w:t></w:r></w:p>", xml_escape(l)))
        .collect();
    let document = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n<w:document xmlns:w=\"http://schemas.openxmlformats.org/wordprocessingml/2006/main\"><w:body>{body}</w:body></w:document>"
    );
    let content_types = "<?xml version=\"1.0\" encoding=\"UTF-8\"?><Types xmlns=\"http://schemas.openxmlformats.org/package/2006/content-types\"><Default Extension=\"xml\" ContentType=\"application/xml\"/><Override PartName=\"/word/document.xml\" ContentType=\"application/vnd.openxmlformats-officedocument.wordprocessingml.document.main+xml\"/></Types>";
    let mut out = std::io::Cursor::new(Vec::new());
    {
        let mut w = zip::ZipWriter::new(&mut out);
        let opts = zip::write::SimpleFileOptions::default()
            .compression_method(zip::CompressionMethod::Deflated)
            .last_modified_time(zip::DateTime::default());
        for (name, data) in [("[Content_Types].xml", content_types), ("word/document.xml", document.as_str())] {
            w.start_file(name, opts).expect("zip entry");
            w.write_all(data.as_bytes()).expect("zip write");
        }
        w.finish().expect("zip finish");
    }
    out.into_inner()
}

/// Writes `n_docs` resumes to `dir/resumes` (every fifth one as `.docx`) and
/// their gold annotation files to `dir/gold`.
pub fn write_fixture_set(dir: &Path, n_docs: usize, seed: u64) -> std::io::Result<Vec<SyntheticResume>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_docs);
    for i in 0..n_docs {
        let doc_id = format!("resume_{i:03}");
        let r = resume(&doc_id, &mut rng);
        if i % 5 == 4 {
            fsutil::write_atomic(&dir.join("resumes").join(format!("{doc_id}.docx")), &docx_bytes(&r.lines))?;
        } else {
            fsutil::write_atomic(&dir.join("resumes").join(format!("{doc_id}.txt")), r.text().as_bytes())?;
        }
        fsutil::write_atomic(
            &dir.join("gold").join(format!("{doc_id}.txt")),
            r.annotation().to_file_string().as_bytes(),
        )?;
        out.push(r);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::class_distribution;
    use crate::ingest::{extract_text, NormalizedDocument, RawDocument};
    use crate::segmenter::{segment, SegmentationConfig};

    #[test]
    fn paper_counts_for_78k() {
        let c = label_counts(78_000, &PAPER_PROPORTIONS);
        assert_eq!(c.iter().sum::<usize>(), 78_000);
        assert_eq!(c[Label::Experience.ordinal()], 39_000);
        assert_eq!(c[Label::Skill.ordinal()], 5_460);
        assert_eq!(c[Label::Object.ordinal()], 2_340);
        assert_eq!(c[Label::Qualification.ordinal()], 780);
    }

    #[test]
    fn corpus_has_exact_shares() {
        let c = corpus(1000, &PAPER_PROPORTIONS, 78, 0.0, 1);
        let labels: Vec<Label> = c.iter().map(|s| s.label).collect();
        let d = class_distribution(&labels).unwrap();
        assert_eq!(d[&Label::Experience], 0.5);
        assert_eq!(d[&Label::Qualification], 0.01);
        assert_eq!(c[78].doc_id, "doc00001");
        assert_eq!(c[78].index, 0);
    }

    #[test]
    fn resumes_segment_into_gold_sentences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = SegmentationConfig::default();
        for i in 0..40 {
            let r = resume(&format!("r{i}"), &mut rng);
            let doc = NormalizedDocument::from_text(r.doc_id.clone(), &r.text());
            let got: Vec<String> = segment(&doc, &cfg).into_iter().map(|s| s.text).collect();
            let want: Vec<String> = r.gold.iter().map(|g| g.0.clone()).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn docx_fixture_extracts_lines() {
        let lines = vec!["Jane Doe".to_string(), "R&D lead".to_string()];
        let doc = RawDocument::detect("x.docx", docx_bytes(&lines));
        assert_eq!(extract_text(&doc).unwrap().text, "Jane Doe\nR&D lead");
    }

    #[test]
    fn generation_is_seeded() {
        assert_eq!(corpus(50, &PAPER_PROPORTIONS, 10, 0.1, 3), corpus(50, &PAPER_PROPORTIONS, 10, 0.1, 3));
        assert_ne!(corpus(50, &PAPER_PROPORTIONS, 10, 0.0, 3), corpus(50, &PAPER_PROPORTIONS, 10, 0.0, 4));
    }
}
