mod common;

use std::collections::BTreeMap;

use common::{post, spawn_server, synthetic_queue, two_client_run};
use rcw_core::corpus::{read_annotation_dir, Label};
use serde_json::{json, Value};

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn single_annotator_workflow() {
    let tmp = tempfile::tempdir().unwrap();
    let (docs, gold) = synthetic_queue(5, 1);
    let server = spawn_server(docs, tmp.path()).await;
    let c = reqwest::Client::new();
    let base = &server.base;

    let p: Value = c.get(format!("{base}/api/progress")).send().await.unwrap().json().await.unwrap();
    assert_eq!((p["pending"].as_u64(), p["checked_out"].as_u64(), p["done"].as_u64()), (Some(5), Some(0), Some(0)));

    let (st, view) = post(&c, format!("{base}/api/sessions"), json!({ "annotator_id": "ann" })).await;
    assert_eq!(st, 200);
    assert_eq!(view["doc_id"], "doc000");
    assert_eq!(view["labels"].as_array().unwrap().len(), 7);
    assert_eq!(view["labels"][1], "PI");
    let sid = view["session_id"].as_str().unwrap().to_string();

    // Last write wins.
    post(&c, format!("{base}/api/sessions/{sid}/labels"), json!({ "index": 0, "label": "PI" })).await;
    post(&c, format!("{base}/api/sessions/{sid}/labels"), json!({ "index": 0, "label": "SUMMARY" })).await;
    let reload: Value = c.get(format!("{base}/api/sessions/{sid}")).send().await.unwrap().json().await.unwrap();
    assert_eq!(reload["sentences"][0]["label"], "SUMMARY");
    assert_eq!(reload["status"], "in_progress");

    let (st, err) = post(&c, format!("{base}/api/sessions/{sid}/complete"), json!({})).await;
    assert_eq!(st, 409);
    assert_eq!(err["error"], "IncompleteAnnotation");
    assert_eq!(err["unlabeled"][0], 1);

    for s in &gold[0].sentences {
        post(&c, format!("{base}/api/sessions/{sid}/labels"), json!({ "index": s.index, "label": s.label.token() })).await;
    }
    let (st, done) = post(&c, format!("{base}/api/sessions/{sid}/complete"), json!({})).await;
    assert_eq!(st, 200);
    assert!(done["exported"].as_str().unwrap().ends_with("doc000.txt"));
    assert_eq!(done["next"]["doc_id"], "doc001");
    assert_eq!(
        std::fs::read_to_string(tmp.path().join("doc000.txt")).unwrap(),
        gold[0].to_file_string()
    );

    let p: Value = c.get(format!("{base}/api/progress")).send().await.unwrap().json().await.unwrap();
    assert_eq!((p["pending"].as_u64(), p["checked_out"].as_u64(), p["done"].as_u64()), (Some(3), Some(1), Some(1)));

    let mut view = done["next"].clone();
    loop {
        let doc = view["doc_id"].as_str().unwrap();
        let g = gold.iter().find(|g| g.doc_id == doc).unwrap();
        for s in &g.sentences {
            post(&c, format!("{base}/api/sessions/{sid}/labels"), json!({ "index": s.index, "label": s.label.token() })).await;
        }
        let (_, r) = post(&c, format!("{base}/api/sessions/{sid}/complete"), json!({})).await;
        if r["next"].is_null() {
            break;
        }
        view = r["next"].clone();
    }
    let reload: Value = c.get(format!("{base}/api/sessions/{sid}")).send().await.unwrap().json().await.unwrap();
    assert_eq!(reload["status"], "complete");

    // The running histogram equals a recount of the exported files.
    let p: Value = c.get(format!("{base}/api/progress")).send().await.unwrap().json().await.unwrap();
    let mut recount: BTreeMap<Label, u64> = Label::ALL.iter().map(|&l| (l, 0)).collect();
    for f in read_annotation_dir(tmp.path()).unwrap() {
        for s in f.sentences {
            *recount.get_mut(&s.label).unwrap() += 1;
        }
    }
    for (l, n) in recount {
        assert_eq!(p["histogram"][l.token()].as_u64(), Some(n), "{l}");
    }
    assert_eq!(p["done"], 5);

    let (st, err) = post(&c, format!("{base}/api/sessions"), json!({ "annotator_id": "late" })).await;
    assert_eq!((st, err["error"].as_str()), (409, Some("QueueEmpty")));
    let (st, err) = post(&c, format!("{base}/api/sessions/{sid}/complete"), json!({})).await;
    assert_eq!((st, err["error"].as_str()), (409, Some("SessionNotActive")));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn error_statuses() {
    let tmp = tempfile::tempdir().unwrap();
    let (docs, _) = synthetic_queue(1, 2);
    let n = docs[0].sentences.len();
    let server = spawn_server(docs, tmp.path()).await;
    let c = reqwest::Client::new();
    let base = &server.base;
    let (_, view) = post(&c, format!("{base}/api/sessions"), json!({ "annotator_id": "a" })).await;
    let sid = view["session_id"].as_str().unwrap();

    let (st, e) = post(&c, format!("{base}/api/sessions/{sid}/labels"), json!({ "index": n + 90, "label": "PI" })).await;
    assert_eq!((st, e["error"].as_str()), (422, Some("IndexOutOfRange")));
    let (st, e) = post(&c, format!("{base}/api/sessions/{sid}/labels"), json!({ "index": 0, "label": "FOO" })).await;
    assert_eq!((st, e["error"].as_str()), (422, Some("UnknownLabel")));
    let (st, e) = post(&c, format!("{base}/api/sessions/nope/labels"), json!({ "index": 0, "label": "PI" })).await;
    assert_eq!((st, e["error"].as_str()), (404, Some("UnknownSession")));
    let (st, e) = post(&c, format!("{base}/api/sessions/nope/complete"), json!({})).await;
    assert_eq!((st, e["error"].as_str()), (404, Some("UnknownSession")));
    let r = c.get(format!("{base}/api/sessions/nope")).send().await.unwrap();
    assert_eq!(r.status().as_u16(), 404);
    let r = c.post(format!("{base}/api/sessions")).body("not json").send().await.unwrap();
    assert!(r.status().is_client_error());
    assert_eq!(std::fs::read_dir(tmp.path()).unwrap().count(), 0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn placeholder_page_without_ui_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let server = spawn_server(Vec::new(), tmp.path()).await;
    let r = reqwest::get(format!("{}/", server.base)).await.unwrap();
    assert_eq!(r.status().as_u16(), 200);
    assert!(r.text().await.unwrap().contains("Annotation API"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn serves_ui_bundle_when_present() {
    let tmp = tempfile::tempdir().unwrap();
    let ui = tempfile::tempdir().unwrap();
    std::fs::write(ui.path().join("index.html"), "<h1>ui</h1>").unwrap();
    let svc = std::sync::Arc::new(
        rcw_core::service::AnnotationService::from_documents(
            Vec::new(),
            tmp.path(),
            rcw_core::service::DEFAULT_LEASE,
            std::sync::Arc::new(rcw_core::service::SystemClock),
        )
        .unwrap(),
    );
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = rcw_core::service::router(svc, Some(ui.path().to_path_buf()));
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    let body = reqwest::get(format!("http://{addr}/")).await.unwrap().text().await.unwrap();
    assert_eq!(body, "<h1>ui</h1>");
    let p = reqwest::get(format!("http://{addr}/api/progress")).await.unwrap();
    assert_eq!(p.status().as_u16(), 200);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn two_clients_never_share_a_document() {
    for seed in 0..3 {
        two_client_run(12, seed).await.unwrap();
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn restart_resumes_from_exported_files() {
    let tmp = tempfile::tempdir().unwrap();
    let (docs, gold) = synthetic_queue(3, 4);
    {
        let server = spawn_server(docs.clone(), tmp.path()).await;
        let c = reqwest::Client::new();
        let (_, view) = post(&c, format!("{}/api/sessions", server.base), json!({ "annotator_id": "a" })).await;
        let sid = view["session_id"].as_str().unwrap();
        for s in &gold[0].sentences {
            post(&c, format!("{}/api/sessions/{sid}/labels", server.base), json!({ "index": s.index, "label": s.label.token() })).await;
        }
        post(&c, format!("{}/api/sessions/{sid}/complete", server.base), json!({})).await;
    }
    let server = spawn_server(docs, tmp.path()).await;
    let p = server.service.progress();
    assert_eq!((p.pending, p.checked_out, p.done), (2, 0, 1));
    let c = reqwest::Client::new();
    let (_, view) = post(&c, format!("{}/api/sessions", server.base), json!({ "annotator_id": "b" })).await;
    assert_eq!(view["doc_id"], "doc001");
}
