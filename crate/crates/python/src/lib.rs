//! Python bindings for the resume corpus workbench.
//!
//! Plain values cross as Python primitives, tuples and lists. Structured
//! reports (evaluation, progress, session views) cross as dicts decoded from
//! their JSON form.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use rcw_core::corpus::{self, Label, ResumeAnnotationFile, SplitSpec};
use rcw_core::evaluation;
use rcw_core::ingest::{self, RawDocument};
use rcw_core::modeling::{self, ModelParams, TrainConfig};
use rcw_core::segmenter::{self, SegmentationConfig};
use rcw_core::service::{AnnotationService, ServiceConfig, DEFAULT_LEASE};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(value).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (s,))
}

fn labels(tokens: &[String]) -> PyResult<Vec<Label>> {
    tokens.iter().map(|t| corpus::parse_label(t).map_err(value_err)).collect()
}

#[pyfunction]
fn normalize_text(text: &str) -> String {
    ingest::normalize_text(text)
}

/// Format name ("txt", "pdf", "docx" or "unknown") of `data`.
#[pyfunction]
#[pyo3(signature = (data, name_hint = ""))]
fn detect_format(data: &[u8], name_hint: &str) -> String {
    ingest::detect_format(data, name_hint).to_string()
}

/// Extracted and normalized text plus warnings.
#[pyfunction]
fn extract_text(name: &str, data: &[u8]) -> PyResult<(String, String, Vec<String>)> {
    let doc = ingest::extract_text(&RawDocument::detect(name, data.to_vec())).map_err(value_err)?;
    Ok((doc.doc_id, doc.text, doc.extraction_warnings))
}

fn seg_config(config_toml: Option<&str>) -> PyResult<SegmentationConfig> {
    match config_toml {
        Some(s) => SegmentationConfig::from_toml_str(s).map_err(value_err),
        None => Ok(SegmentationConfig::default()),
    }
}

type SentenceTuple = (usize, String, (usize, usize));

/// `(index, text, (start, end))` per sentence; spans are character offsets
/// into the normalized text.
#[pyfunction]
#[pyo3(signature = (text, config_toml = None))]
fn segment(text: &str, config_toml: Option<&str>) -> PyResult<Vec<SentenceTuple>> {
    let cfg = seg_config(config_toml)?;
    let doc = ingest::NormalizedDocument::from_text("doc", text);
    Ok(segmenter::segment(&doc, &cfg)
        .into_iter()
        .map(|s| (s.index, s.text, s.span))
        .collect())
}

#[pyfunction]
fn label_tokens() -> Vec<&'static str> {
    Label::tokens()
}

/// Canonical token for a case-insensitive label.
#[pyfunction]
fn parse_label(token: &str) -> PyResult<&'static str> {
    corpus::parse_label(token).map(Label::token).map_err(value_err)
}

#[pyfunction]
fn format_annotation(doc_id: &str, items: Vec<(String, String)>) -> PyResult<String> {
    let parsed = items
        .iter()
        .map(|(t, l)| Ok((t.as_str(), corpus::parse_label(l).map_err(value_err)?)))
        .collect::<PyResult<Vec<_>>>()?;
    Ok(ResumeAnnotationFile::from_labeled(doc_id, parsed).to_file_string())
}

/// `(label, text)` pairs of an annotation file's content.
#[pyfunction]
fn parse_annotation(doc_id: &str, content: &str) -> PyResult<Vec<(&'static str, String)>> {
    let f = ResumeAnnotationFile::parse(doc_id, content).map_err(value_err)?;
    Ok(f.sentences.into_iter().map(|s| (s.label.token(), s.text)).collect())
}

/// Part sizes of an `n`-sentence split, by ratios or absolute sizes.
#[pyfunction]
#[pyo3(signature = (n, ratios = None, sizes = None))]
fn split_sizes(n: usize, ratios: Option<[f64; 3]>, sizes: Option<[usize; 3]>) -> PyResult<[usize; 3]> {
    let spec = match (ratios, sizes) {
        (Some(_), Some(_)) => return Err(PyValueError::new_err("give ratios or sizes, not both")),
        (_, Some(s)) => SplitSpec::Sizes(s),
        (Some(r), None) => SplitSpec::Ratios(r),
        (None, None) => SplitSpec::Ratios(SplitSpec::DEFAULT_RATIOS),
    };
    spec.part_sizes(n).map_err(value_err)
}

#[pyfunction]
fn f1_micro(truth: Vec<String>, pred: Vec<String>) -> PyResult<f64> {
    evaluation::f1_micro(&labels(&truth)?, &labels(&pred)?).map_err(value_err)
}

/// Row-major counts, truth by prediction, in `label_tokens()` order.
#[pyfunction]
fn confusion(truth: Vec<String>, pred: Vec<String>) -> PyResult<Vec<Vec<usize>>> {
    let m = evaluation::confusion(&labels(&truth)?, &labels(&pred)?).map_err(value_err)?;
    Ok(Label::ALL
        .iter()
        .map(|&t| Label::ALL.iter().map(|&p| m.get(t, p)).collect())
        .collect())
}

/// Sparse `(bucket, value)` pairs of the L2-normalized hashed n-grams.
#[pyfunction]
#[pyo3(signature = (text, dim = modeling::DEFAULT_DIM))]
fn featurize(text: &str, dim: usize) -> Vec<(u32, f64)> {
    modeling::featurize(text, dim).entries
}

#[pyclass(frozen)]
struct Model {
    inner: ModelParams,
}

#[pymethods]
impl Model {
    /// Trains on parallel lists of sentences and label tokens.
    #[staticmethod]
    #[pyo3(signature = (texts, labels, epochs = None, learning_rate = None, batch_size = None, seed = None, dim = None, l2 = None))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        py: Python<'_>,
        texts: Vec<String>,
        labels: Vec<String>,
        epochs: Option<usize>,
        learning_rate: Option<f64>,
        batch_size: Option<usize>,
        seed: Option<u64>,
        dim: Option<usize>,
        l2: Option<f64>,
    ) -> PyResult<Model> {
        if texts.len() != labels.len() {
            return Err(PyValueError::new_err("texts and labels differ in length"));
        }
        let d = TrainConfig::default();
        let cfg = TrainConfig {
            epochs: epochs.unwrap_or(d.epochs),
            learning_rate: learning_rate.unwrap_or(d.learning_rate),
            batch_size: batch_size.unwrap_or(d.batch_size),
            seed: seed.unwrap_or(d.seed),
            dim: dim.unwrap_or(d.dim),
            l2: l2.unwrap_or(d.l2),
        };
        let items: Vec<(String, Label)> = texts.into_iter().zip(self::labels(&labels)?).collect();
        let inner = py
            .detach(|| modeling::train(&evaluation::featurize_labeled(&items, cfg.dim), &cfg))
            .map_err(value_err)?;
        Ok(Model { inner })
    }

    /// `(label, [(label, probability), ...])` for one sentence.
    fn predict(&self, text: &str) -> (&'static str, Vec<(&'static str, f64)>) {
        let p = modeling::predict_text(&self.inner, text);
        let probs = Label::ALL.iter().map(|l| l.token()).zip(p.probabilities).collect();
        (p.label.token(), probs)
    }

    fn predict_many(&self, texts: Vec<String>) -> Vec<&'static str> {
        texts.iter().map(|t| modeling::predict_text(&self.inner, t).label.token()).collect()
    }

    /// Evaluation report as a dict.
    fn evaluate<'py>(&self, py: Python<'py>, texts: Vec<String>, labels: Vec<String>) -> PyResult<Bound<'py, PyAny>> {
        let items: Vec<(String, Label)> = texts.into_iter().zip(self::labels(&labels)?).collect();
        let meta = evaluation::RunMetadata {
            seed: self.inner.meta.seed,
            model_id: evaluation::model_id(&self.inner),
            split_id: "python".into(),
        };
        let r = evaluation::evaluate(&self.inner, &evaluation::featurize_labeled(&items, self.inner.dim), meta)
            .map_err(value_err)?;
        to_py(py, &r)
    }

    #[getter]
    fn model_id(&self) -> String {
        evaluation::model_id(&self.inner)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &modeling::model_to_bytes(&self.inner))
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Model> {
        Ok(Model {
            inner: modeling::model_from_bytes(data).map_err(value_err)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        modeling::save_model(&self.inner, &path).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Model> {
        Ok(Model {
            inner: modeling::load_model(&path).map_err(|e| PyIOError::new_err(e.to_string()))?,
        })
    }
}

/// In-process annotation queue over a directory of segmented documents.
#[pyclass(frozen)]
struct Annotator {
    inner: Arc<AnnotationService>,
}

#[pymethods]
impl Annotator {
    #[new]
    #[pyo3(signature = (input_dir, export_dir, lease_secs = None))]
    fn new(input_dir: PathBuf, export_dir: PathBuf, lease_secs: Option<u64>) -> PyResult<Self> {
        let cfg = ServiceConfig {
            input_dir,
            export_dir,
            lease: lease_secs.map_or(DEFAULT_LEASE, std::time::Duration::from_secs),
        };
        Ok(Annotator {
            inner: Arc::new(AnnotationService::open(&cfg).map_err(value_err)?),
        })
    }

    fn start_session<'py>(&self, py: Python<'py>, annotator_id: &str) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.start_session(annotator_id).map_err(value_err)?)
    }

    fn submit_label(&self, session_id: &str, index: usize, label: &str) -> PyResult<()> {
        self.inner.submit_label(session_id, index, label).map_err(value_err)
    }

    fn complete_resume<'py>(&self, py: Python<'py>, session_id: &str) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.complete_resume(session_id).map_err(value_err)?)
    }

    fn progress<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.progress())
    }
}

/// Full pipeline on a fixture directory; returns the report dict.
#[pyfunction]
#[pyo3(signature = (fixtures, work_dir, config_path = None))]
fn run_e2e<'py>(
    py: Python<'py>,
    fixtures: PathBuf,
    work_dir: PathBuf,
    config_path: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let path = config_path.unwrap_or_else(|| fixtures.join(rcw_core::cli::FIXTURE_CONFIG));
    let cfg = if path.is_file() {
        rcw_core::cli::PipelineConfig::load(&path).map_err(value_err)?
    } else {
        rcw_core::cli::PipelineConfig::default()
    };
    let report = py
        .detach(|| rcw_core::cli::run_e2e(&fixtures, &work_dir, &cfg, &mut std::io::sink()))
        .map_err(value_err)?;
    to_py(py, &report)
}

#[pymodule]
fn rcw(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(normalize_text, m)?)?;
    m.add_function(wrap_pyfunction!(detect_format, m)?)?;
    m.add_function(wrap_pyfunction!(extract_text, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(label_tokens, m)?)?;
    m.add_function(wrap_pyfunction!(parse_label, m)?)?;
    m.add_function(wrap_pyfunction!(format_annotation, m)?)?;
    m.add_function(wrap_pyfunction!(parse_annotation, m)?)?;
    m.add_function(wrap_pyfunction!(split_sizes, m)?)?;
    m.add_function(wrap_pyfunction!(f1_micro, m)?)?;
    m.add_function(wrap_pyfunction!(confusion, m)?)?;
    m.add_function(wrap_pyfunction!(featurize, m)?)?;
    m.add_function(wrap_pyfunction!(run_e2e, m)?)?;
    m.add_class::<Model>()?;
    m.add_class::<Annotator>()?;
    Ok(())
}
