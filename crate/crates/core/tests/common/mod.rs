#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rcw_core::corpus::{read_annotation_dir, Label, ResumeAnnotationFile};
use rcw_core::ingest::NormalizedDocument;
use rcw_core::modeling::{data_gradient, loss, FeatureVector, ModelParams, TrainConfig};
use rcw_core::segmenter::{segment, SegmentationConfig, SegmentedDocument};
use rcw_core::service::{router, AnnotationService, SystemClock};
use rcw_core::synth;
use serde_json::{json, Value};

/// Segmented synthetic resumes and their gold annotation files.
pub fn synthetic_queue(n: usize, seed: u64) -> (Vec<SegmentedDocument>, Vec<ResumeAnnotationFile>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = SegmentationConfig::default();
    (0..n)
        .map(|i| {
            let r = synth::resume(&format!("doc{i:03}"), &mut rng);
            let doc = NormalizedDocument::from_text(r.doc_id.clone(), &r.text());
            let seg = SegmentedDocument {
                doc_id: r.doc_id.clone(),
                sentences: segment(&doc, &cfg),
            };
            (seg, r.annotation())
        })
        .unzip()
}

pub struct Server {
    pub base: String,
    pub service: Arc<AnnotationService>,
}

pub async fn spawn_server(docs: Vec<SegmentedDocument>, export: &Path) -> Server {
    let service = Arc::new(
        AnnotationService::from_documents(docs, export, Duration::from_secs(60), Arc::new(SystemClock)).unwrap(),
    );
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let app = router(service.clone(), None);
    tokio::spawn(async move {
        axum::serve(listener, app).await.unwrap();
    });
    Server { base, service }
}

pub async fn post(client: &reqwest::Client, url: String, body: Value) -> (u16, Value) {
    let r = client.post(url).json(&body).send().await.unwrap();
    let status = r.status().as_u16();
    (status, r.json().await.unwrap_or(Value::Null))
}

/// One annotator labeling with the gold files until the queue is empty.
/// Returns the doc ids it was handed, in order.
pub async fn annotate_until_empty(base: String, name: &str, gold: Arc<Vec<ResumeAnnotationFile>>) -> Vec<String> {
    let client = reqwest::Client::new();
    let (status, mut view) = post(&client, format!("{base}/api/sessions"), json!({ "annotator_id": name })).await;
    let mut handled = Vec::new();
    if status == 409 {
        return handled;
    }
    assert_eq!(status, 200, "{view}");
    let session = view["session_id"].as_str().unwrap().to_string();
    loop {
        let doc_id = view["doc_id"].as_str().unwrap().to_string();
        let file = gold.iter().find(|f| f.doc_id == doc_id).unwrap();
        for s in &file.sentences {
            let (st, body) = post(
                &client,
                format!("{base}/api/sessions/{session}/labels"),
                json!({ "index": s.index, "label": s.label.token() }),
            )
            .await;
            assert_eq!(st, 200, "{body}");
            tokio::task::yield_now().await;
        }
        let (st, body) = post(&client, format!("{base}/api/sessions/{session}/complete"), json!({})).await;
        assert_eq!(st, 200, "{body}");
        handled.push(doc_id);
        if body["next"].is_null() {
            return handled;
        }
        view = body["next"].clone();
    }
}

/// Two annotators working the same queue concurrently. Checks that no
/// document went to both, every document was exported exactly once with
/// its gold content, and no temporary files remain.
pub async fn two_client_run(n_docs: usize, seed: u64) -> Result<(), String> {
    let tmp = tempfile::tempdir().unwrap();
    let (docs, gold) = synthetic_queue(n_docs, seed);
    let server = spawn_server(docs, tmp.path()).await;
    let gold = Arc::new(gold);
    let a = tokio::spawn(annotate_until_empty(server.base.clone(), "alice", gold.clone()));
    let b = tokio::spawn(annotate_until_empty(server.base.clone(), "bob", gold.clone()));
    let (a, b) = (a.await.unwrap(), b.await.unwrap());

    let sa: BTreeSet<&String> = a.iter().collect();
    let sb: BTreeSet<&String> = b.iter().collect();
    if sa.len() != a.len() || sb.len() != b.len() {
        return Err("a client saw the same document twice".into());
    }
    if !sa.is_disjoint(&sb) {
        return Err(format!("double checkout: {:?}", sa.intersection(&sb).collect::<Vec<_>>()));
    }
    if a.len() + b.len() != n_docs {
        return Err(format!("{} + {} documents handled, expected {n_docs}", a.len(), b.len()));
    }
    let names: Vec<String> = std::fs::read_dir(tmp.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    if names.len() != n_docs || names.iter().any(|n| !n.ends_with(".txt")) {
        return Err(format!("unexpected export directory contents: {names:?}"));
    }
    let exported = read_annotation_dir(tmp.path()).map_err(|e| e.to_string())?;
    for f in &exported {
        let g = gold.iter().find(|g| g.doc_id == f.doc_id).unwrap();
        if f.to_file_string() != g.to_file_string() {
            return Err(format!("{} differs from gold", f.doc_id));
        }
    }
    let p = server.service.progress();
    if (p.pending, p.checked_out, p.done) != (0, 0, n_docs) {
        return Err(format!("progress {p:?}"));
    }
    Ok(())
}

/// Vocabulary for randomized resume-like documents: bullets, numeric list
/// markers, abbreviations and digit-bearing tokens.
pub const TOKENS: &[&str] = &[
    "Led", "team", "Rust", "engineer", "Dr.", "Inc.", "e.g.", "Ph.D.", "3.5", "v2.0", "2019.",
    "jane@x.com.", "https://a.b/c.", "5.", "1)", "12.", "•", "-", "*", "◦", "x", ".", "!", "?", ";",
    "end.", "done!", "why?", "a;", "B", "Smith", "GPA", "café", "  ",
];

/// Leading whitespace, bullet glyphs and numeric list markers removed, then
/// trailing whitespace.
pub fn strip_marker<'a>(s: &'a str, glyphs: &[char]) -> &'a str {
    let mut rest = s.trim();
    loop {
        let before = rest;
        rest = rest.trim_start_matches(|c: char| glyphs.contains(&c) || c.is_whitespace());
        let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
        if (1..=3).contains(&digits.len()) {
            let tail = &rest[digits.len()..];
            if (tail.starts_with('.') || tail.starts_with(')'))
                && tail[1..].chars().next().is_none_or(char::is_whitespace)
            {
                rest = &tail[1..];
            }
        }
        if rest == before {
            return rest.trim_end();
        }
    }
}

fn char_slice(text: &str, (a, b): (usize, usize)) -> String {
    text.chars().skip(a).take(b - a).collect()
}

/// Determinism, contiguous indices, non-overlapping spans, span fidelity,
/// and coverage that is lossless except for the fragments outside every
/// span.
pub fn check_segmentation(text: &str) -> Result<(), String> {
    use rcw_core::segmenter::coverage_check;
    let cfg = SegmentationConfig::default();
    let doc = NormalizedDocument::from_text("d", text);
    let sentences = segment(&doc, &cfg);
    if segment(&doc, &cfg) != sentences {
        return Err("segmentation is not deterministic".into());
    }
    let mut last_end = 0;
    for (i, s) in sentences.iter().enumerate() {
        if s.index != i {
            return Err(format!("index {} at position {i}", s.index));
        }
        if s.text.trim().is_empty() || s.text.chars().count() < cfg.min_chars {
            return Err(format!("sentence {i} too short: {:?}", s.text));
        }
        if (i > 0 && s.span.0 < last_end) || s.span.0 >= s.span.1 {
            return Err(format!("bad span {:?} at {i}", s.span));
        }
        last_end = s.span.1;
        let raw = char_slice(&doc.text, s.span);
        if strip_marker(&raw, &cfg.bullets) != s.text {
            return Err(format!("span {:?} holds {raw:?}, sentence is {:?}", s.span, s.text));
        }
    }
    let report = coverage_check(&doc, &sentences, &cfg);
    if !report.unexpected.is_empty() {
        return Err(format!("unexpected characters {:?}", report.unexpected));
    }
    let mut covered = vec![false; doc.text.chars().count()];
    for s in &sentences {
        for c in &mut covered[s.span.0..s.span.1] {
            *c = true;
        }
    }
    let mut outside: BTreeMap<char, usize> = BTreeMap::new();
    for (c, inside) in doc.text.chars().zip(&covered) {
        if !inside && !c.is_whitespace() && !cfg.bullets.contains(&c) {
            *outside.entry(c).or_default() += 1;
        }
    }
    if report.missing != outside {
        return Err(format!("missing {:?} but outside spans {outside:?}", report.missing));
    }
    Ok(())
}

pub fn toy_set(rng_seed: u64, n: usize, dim: usize) -> (ModelParams, Vec<(FeatureVector, Label)>) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng_seed);
    let cfg = TrainConfig { dim, ..TrainConfig::default() };
    let mut m = ModelParams::zeros(&cfg);
    for w in &mut m.weights {
        *w = rng.random_range(-1.0..1.0);
    }
    for b in &mut m.bias {
        *b = rng.random_range(-1.0..1.0);
    }
    let data = (0..n)
        .map(|_| {
            let counts = (0..4).map(|_| (rng.random_range(0..dim as u32), rng.random_range(0.5..3.0))).collect();
            (FeatureVector::from_counts(dim, counts), Label::ALL[rng.random_range(0..Label::COUNT)])
        })
        .collect();
    (m, data)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    let scale = a.abs().max(b.abs());
    scale < 1e-8 || (a - b).abs() <= tol * scale
}

/// Central differences of the loss against the analytic gradient.
pub fn gradient_check(seed: u64) -> Result<(), String> {
    let (mut m, data) = toy_set(seed, 5, 6);
    let l2 = 0.01;
    let g = data_gradient(&m, &data, l2);
    let h = 1e-5;
    for i in 0..m.weights.len() {
        let w = m.weights[i];
        m.weights[i] = w + h;
        let up = loss(&m, &data, l2);
        m.weights[i] = w - h;
        let down = loss(&m, &data, l2);
        m.weights[i] = w;
        let numeric = (up - down) / (2.0 * h);
        if !rel_close(g.weights[i], numeric, 1e-4) {
            return Err(format!("weight {i}: analytic {} numeric {numeric}", g.weights[i]));
        }
    }
    for k in 0..Label::COUNT {
        let b = m.bias[k];
        m.bias[k] = b + h;
        let up = loss(&m, &data, l2);
        m.bias[k] = b - h;
        let down = loss(&m, &data, l2);
        m.bias[k] = b;
        let numeric = (up - down) / (2.0 * h);
        if !rel_close(g.bias[k], numeric, 1e-4) {
            return Err(format!("bias {k}: analytic {} numeric {numeric}", g.bias[k]));
        }
    }
    Ok(())
}
