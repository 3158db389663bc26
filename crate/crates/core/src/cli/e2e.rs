use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{assemble_dir, ingest_dir, manifest_timestamp, segment_dir, split_corpus, CliError, PipelineConfig, MODEL_FILE};
use crate::corpus::{annotation_path, read_annotation_file, ResumeAnnotationFile};
use crate::evaluation::{evaluate, featurize_sentences, model_id, EvalReport, RunMetadata};
use crate::modeling::{save_model, train};
use crate::service::{AnnotationService, SystemClock, DEFAULT_LEASE};

pub fn default_fixture_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/e2e"))
}

/// Summary written to `<root>/report.json` by [`run_e2e`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct E2eReport {
    pub documents: usize,
    pub sentences: usize,
    pub corpus_id: String,
    pub split_sizes: [usize; 3],
    pub seed: u64,
    pub model_id: String,
    pub valid: EvalReport,
    pub test: EvalReport,
}

fn fixture_error(msg: String) -> CliError {
    CliError::data("fixture", msg)
}

fn txt_stems(dir: &Path) -> Result<Vec<(String, PathBuf)>, CliError> {
    let mut out: Vec<(String, PathBuf)> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .filter_map(|p| Some((p.file_stem()?.to_string_lossy().into_owned(), p)))
        .collect();
    out.sort();
    Ok(out)
}

fn all_files(dir: &Path) -> Vec<PathBuf> {
    std::fs::read_dir(dir)
        .map(|rd| rd.filter_map(|e| e.ok().map(|e| e.path())).collect())
        .unwrap_or_default()
}

/// Runs ingest, segmentation, annotation (driven by the gold files through
/// the annotation service), assembly, splitting, training and evaluation on
/// `fixtures/{resumes,gold}`, writing everything under `root`.
pub fn run_e2e(fixtures: &Path, root: &Path, cfg: &PipelineConfig, log: &mut dyn Write) -> Result<E2eReport, CliError> {
    let resumes = fixtures.join("resumes");
    let gold_dir = fixtures.join("gold");
    for d in [&resumes, &gold_dir] {
        if !d.is_dir() {
            return Err(fixture_error(format!("missing fixture directory {}", d.display())));
        }
    }
    if root.exists() {
        std::fs::remove_dir_all(root).map_err(|e| CliError::io(root, e))?;
    }

    ingest_dir(&resumes, &root.join("normalized"), log)?;
    let segmented = segment_dir(&root.join("normalized"), &root.join("segmented"), &cfg.segmentation, log)?;

    let mut gold: HashMap<String, (PathBuf, ResumeAnnotationFile)> = HashMap::new();
    for doc in &segmented {
        let path = annotation_path(&gold_dir, &doc.doc_id);
        if !path.is_file() {
            return Err(fixture_error(format!("missing gold annotation {}", path.display())));
        }
        gold.insert(doc.doc_id.clone(), (path.clone(), read_annotation_file(&path)?));
    }
    let known: BTreeSet<&str> = segmented.iter().map(|d| d.doc_id.as_str()).collect();
    if let Some((_, p)) = txt_stems(&gold_dir)?.into_iter().find(|(s, _)| !known.contains(s.as_str())) {
        return Err(fixture_error(format!("gold annotation {} has no matching resume", p.display())));
    }

    let export = root.join("annotations");
    let svc = AnnotationService::from_documents(segmented, &export, DEFAULT_LEASE, Arc::new(SystemClock))?;
    let mut view = Some(svc.start_session("e2e")?);
    while let Some(v) = view {
        let doc_id = v.doc_id.clone().unwrap_or_default();
        let (path, file) = &gold[&doc_id];
        if file.sentences.len() != v.sentences.len() {
            return Err(fixture_error(format!(
                "{} has {} sentences but segmentation produced {}",
                path.display(),
                file.sentences.len(),
                v.sentences.len()
            )));
        }
        for (s, g) in v.sentences.iter().zip(&file.sentences) {
            if s.text != g.text {
                return Err(fixture_error(format!(
                    "{} sentence {} is {:?} but segmentation produced {:?}",
                    path.display(),
                    s.index,
                    g.text,
                    s.text
                )));
            }
            svc.submit_label(&v.session_id, s.index, g.label.token())?;
        }
        view = svc.complete_resume(&v.session_id)?.next;
    }

    let mut inputs = all_files(&resumes);
    inputs.extend(all_files(&gold_dir));
    let corpus = assemble_dir(&export, &root.join("corpus"), Some(manifest_timestamp(&inputs)))?;

    let seed = cfg.effective_seed();
    let parts = split_corpus(&corpus, cfg.split.spec(), cfg.split.mode(), seed, &root.join("split"))?;
    let [train_set, valid_set, test_set] = parts.materialize(&corpus.sentences)?;
    let tc = cfg.train_config();
    let model = train(&featurize_sentences(&train_set, tc.dim), &tc)?;
    save_model(&model, &root.join(MODEL_FILE))?;
    let id = model_id(&model);
    let meta = |split_id: &str| RunMetadata {
        seed,
        model_id: id.clone(),
        split_id: split_id.to_string(),
    };
    let valid = evaluate(&model, &featurize_sentences(&valid_set, tc.dim), meta("valid"))?;
    let test = evaluate(&model, &featurize_sentences(&test_set, tc.dim), meta("test"))?;
    let report = E2eReport {
        documents: corpus.manifest.documents.len(),
        sentences: corpus.manifest.total_sentences,
        corpus_id: corpus.manifest.corpus_id.clone(),
        split_sizes: parts.sizes(),
        seed,
        model_id: id,
        valid,
        test,
    };
    super::write_json(&root.join("report.json"), &report)?;
    Ok(report)
}
