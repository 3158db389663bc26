//! Annotation backend: a queue of segmented resumes handed out to annotator
//! sessions under time-limited leases, with exactly-once export of each
//! completed resume as a `LABEL\ttext` annotation file.
//!
//! All state lives behind one mutex. The export directory is the durable
//! record: on start-up every document with an export file is `Done` and the
//! label histogram is rebuilt from those files.

mod http;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{router, serve, ApiError};

use crate::corpus::{
    annotation_path, parse_label, read_annotation_file, CorpusError, Label, ResumeAnnotationFile,
};
use crate::fsutil;
use crate::segmenter::SegmentedDocument;

pub const DEFAULT_LEASE: Duration = Duration::from_secs(30 * 60);

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("no pending documents")]
    QueueEmpty,
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("sentence index {index} out of range for {len} sentences")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("session {0} has no active document")]
    SessionNotActive(String),
    #[error("lease on {doc_id} expired and the document was reassigned")]
    LeaseExpired { doc_id: String },
    #[error("unlabeled sentences: {0:?}")]
    IncompleteAnnotation(Vec<usize>),
    #[error("{doc_id} was already exported")]
    AlreadyExported { doc_id: String },
    #[error("invalid segmented document {path}: {reason}")]
    BadInput { path: String, reason: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ServiceError {
    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::QueueEmpty => "QueueEmpty",
            ServiceError::UnknownSession(_) => "UnknownSession",
            ServiceError::IndexOutOfRange { .. } => "IndexOutOfRange",
            ServiceError::UnknownLabel(_) => "UnknownLabel",
            ServiceError::SessionNotActive(_) => "SessionNotActive",
            ServiceError::LeaseExpired { .. } => "LeaseExpired",
            ServiceError::IncompleteAnnotation(_) => "IncompleteAnnotation",
            ServiceError::AlreadyExported { .. } => "AlreadyExported",
            ServiceError::BadInput { .. } => "BadInput",
            ServiceError::Corpus(_) => "CorpusError",
            ServiceError::Io { .. } => "IoError",
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> ServiceError {
    ServiceError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Time source for lease expiry; tests substitute a manual clock.
pub trait Clock: Send + Sync {
    fn now(&self) -> Instant;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Instant {
        Instant::now()
    }
}

/// A clock that only moves when told to.
pub struct ManualClock {
    start: Instant,
    offset: Mutex<Duration>,
}

impl ManualClock {
    pub fn new() -> Self {
        ManualClock {
            start: Instant::now(),
            offset: Mutex::new(Duration::ZERO),
        }
    }

    pub fn advance(&self, by: Duration) {
        *self.offset.lock().unwrap_or_else(|e| e.into_inner()) += by;
    }
}

impl Default for ManualClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Instant {
        self.start + *self.offset.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum DocState {
    Pending,
    CheckedOut { session: String, expires: Instant },
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    InProgress,
    Complete,
}

#[derive(Debug)]
struct Session {
    annotator_id: String,
    doc_id: Option<String>,
    labels: Vec<Option<Label>>,
    status: SessionStatus,
}

struct State {
    order: Vec<String>,
    docs: HashMap<String, (Arc<SegmentedDocument>, DocState)>,
    sessions: HashMap<String, Session>,
    next_session: u64,
    histogram: BTreeMap<Label, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceView {
    pub index: usize,
    pub text: String,
    pub label: Option<Label>,
}

/// What a client needs to render the current document of a session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub annotator_id: String,
    pub status: SessionStatus,
    pub doc_id: Option<String>,
    pub sentences: Vec<SentenceView>,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompleteResult {
    pub exported: String,
    pub next: Option<SessionView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub pending: usize,
    pub checked_out: usize,
    pub done: usize,
    pub histogram: BTreeMap<Label, usize>,
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Directory of `<doc_id>.json` segmented documents.
    pub input_dir: PathBuf,
    /// Directory receiving one `<doc_id>.txt` annotation file per resume.
    pub export_dir: PathBuf,
    pub lease: Duration,
}

pub struct AnnotationService {
    state: Mutex<State>,
    export_dir: PathBuf,
    lease: Duration,
    clock: Arc<dyn Clock>,
}

/// Reads every `*.json` segmented document in `dir`, sorted by file name.
pub fn load_segmented_dir(dir: &Path) -> Result<Vec<SegmentedDocument>, ServiceError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let s = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            serde_json::from_str(&s).map_err(|e| ServiceError::BadInput {
                path: p.display().to_string(),
                reason: e.to_string(),
            })
        })
        .collect()
}

impl AnnotationService {
    pub fn open(cfg: &ServiceConfig) -> Result<Self, ServiceError> {
        Self::open_with_clock(cfg, Arc::new(SystemClock))
    }

    pub fn open_with_clock(cfg: &ServiceConfig, clock: Arc<dyn Clock>) -> Result<Self, ServiceError> {
        let docs = load_segmented_dir(&cfg.input_dir)?;
        Self::from_documents(docs, &cfg.export_dir, cfg.lease, clock)
    }

    /// Builds the queue from in-memory documents. Documents whose export
    /// file already exists start out `Done`.
    pub fn from_documents(
        mut docs: Vec<SegmentedDocument>,
        export_dir: &Path,
        lease: Duration,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, ServiceError> {
        std::fs::create_dir_all(export_dir).map_err(|e| io_err(export_dir, e))?;
        docs.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
        let mut histogram: BTreeMap<Label, usize> = Label::ALL.iter().map(|&l| (l, 0)).collect();
        let mut order = Vec::with_capacity(docs.len());
        let mut map = HashMap::with_capacity(docs.len());
        for doc in docs {
            let path = annotation_path(export_dir, &doc.doc_id);
            let state = if path.exists() {
                for s in read_annotation_file(&path)?.sentences {
                    *histogram.entry(s.label).or_default() += 1;
                }
                DocState::Done
            } else {
                DocState::Pending
            };
            order.push(doc.doc_id.clone());
            if map.insert(doc.doc_id.clone(), (Arc::new(doc), state)).is_some() {
                return Err(CorpusError::DuplicateDocId(order.pop().unwrap_or_default()).into());
            }
        }
        Ok(AnnotationService {
            state: Mutex::new(State {
                order,
                docs: map,
                sessions: HashMap::new(),
                next_session: 1,
                histogram,
            }),
            export_dir: export_dir.to_path_buf(),
            lease,
            clock,
        })
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Returns expired leases to `Pending`.
    fn expire(&self, st: &mut State) {
        let now = self.clock.now();
        for (_, state) in st.docs.values_mut() {
            if matches!(state, DocState::CheckedOut { expires, .. } if *expires <= now) {
                *state = DocState::Pending;
            }
        }
    }

    /// Checks out the first pending document for `session`.
    fn checkout(&self, st: &mut State, session: &str) -> Option<String> {
        let expires = self.clock.now() + self.lease;
        let State { order, docs, .. } = st;
        let doc_id = order
            .iter()
            .find(|id| matches!(docs.get(*id), Some((_, DocState::Pending))))?
            .clone();
        if let Some(entry) = docs.get_mut(&doc_id) {
            entry.1 = DocState::CheckedOut {
                session: session.to_string(),
                expires,
            };
        }
        Some(doc_id)
    }

    fn view(st: &State, session_id: &str) -> Result<SessionView, ServiceError> {
        let session = st
            .sessions
            .get(session_id)
            .ok_or_else(|| ServiceError::UnknownSession(session_id.to_string()))?;
        let sentences = match &session.doc_id {
            Some(doc_id) => st.docs[doc_id]
                .0
                .sentences
                .iter()
                .zip(&session.labels)
                .map(|(s, l)| SentenceView {
                    index: s.index,
                    text: s.text.clone(),
                    label: *l,
                })
                .collect(),
            None => Vec::new(),
        };
        Ok(SessionView {
            session_id: session_id.to_string(),
            annotator_id: session.annotator_id.clone(),
            status: session.status,
            doc_id: session.doc_id.clone(),
            sentences,
            labels: Label::tokens().iter().map(|t| t.to_string()).collect(),
        })
    }

    fn attach(st: &mut State, session_id: &str, doc_id: Option<String>) {
        let n = doc_id
            .as_ref()
            .map_or(0, |d| st.docs[d].0.sentences.len());
        if let Some(s) = st.sessions.get_mut(session_id) {
            s.status = if doc_id.is_some() {
                SessionStatus::InProgress
            } else {
                SessionStatus::Complete
            };
            s.doc_id = doc_id;
            s.labels = vec![None; n];
        }
    }

    /// Opens a session on the next pending document.
    pub fn start_session(&self, annotator_id: &str) -> Result<SessionView, ServiceError> {
        let mut st = self.lock();
        self.expire(&mut st);
        let session_id = format!("s{}", st.next_session);
        let doc_id = self.checkout(&mut st, &session_id).ok_or(ServiceError::QueueEmpty)?;
        st.next_session += 1;
        st.sessions.insert(
            session_id.clone(),
            Session {
                annotator_id: annotator_id.to_string(),
                doc_id: None,
                labels: Vec::new(),
                status: SessionStatus::InProgress,
            },
        );
        Self::attach(&mut st, &session_id, Some(doc_id));
        Self::view(&st, &session_id)
    }

    /// Confirms the session still holds its document, re-taking it if the
    /// lease lapsed but nobody else picked it up, and renews the lease.
    fn hold(&self, st: &mut State, session_id: &str) -> Result<String, ServiceError> {
        self.expire(st);
        let session = st
            .sessions
            .get(session_id)
            .ok_or_else(|| ServiceError::UnknownSession(session_id.to_string()))?;
        let doc_id = session
            .doc_id
            .clone()
            .ok_or_else(|| ServiceError::SessionNotActive(session_id.to_string()))?;
        let expires = self.clock.now() + self.lease;
        let entry = st.docs.get_mut(&doc_id).expect("session document is queued");
        match &entry.1 {
            DocState::CheckedOut { session, .. } if session == session_id => {}
            DocState::Pending => {}
            DocState::Done => return Err(ServiceError::AlreadyExported { doc_id }),
            DocState::CheckedOut { .. } => return Err(ServiceError::LeaseExpired { doc_id }),
        }
        entry.1 = DocState::CheckedOut {
            session: session_id.to_string(),
            expires,
        };
        Ok(doc_id)
    }

    /// Records `label` for sentence `index`; a later call for the same
    /// index replaces the earlier label.
    pub fn submit_label(&self, session_id: &str, index: usize, label: &str) -> Result<(), ServiceError> {
        let mut st = self.lock();
        let label = parse_label(label).map_err(|_| ServiceError::UnknownLabel(label.to_string()))?;
        self.hold(&mut st, session_id)?;
        let session = st.sessions.get_mut(session_id).expect("held session exists");
        let len = session.labels.len();
        let slot = session
            .labels
            .get_mut(index)
            .ok_or(ServiceError::IndexOutOfRange { index, len })?;
        *slot = Some(label);
        Ok(())
    }

    /// Exports the session's document once every sentence is labeled, then
    /// moves the session on to the next pending document if there is one.
    pub fn complete_resume(&self, session_id: &str) -> Result<CompleteResult, ServiceError> {
        let mut st = self.lock();
        let doc_id = self.hold(&mut st, session_id)?;
        let session = &st.sessions[session_id];
        let missing: Vec<usize> = session
            .labels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_none())
            .map(|(i, _)| i)
            .collect();
        if !missing.is_empty() {
            return Err(ServiceError::IncompleteAnnotation(missing));
        }
        let doc = Arc::clone(&st.docs[&doc_id].0);
        let file = ResumeAnnotationFile::from_labeled(
            doc_id.clone(),
            doc.sentences
                .iter()
                .zip(&session.labels)
                .map(|(s, l)| (s.text.as_str(), l.expect("checked above"))),
        );
        let path = annotation_path(&self.export_dir, &doc_id);
        match fsutil::write_atomic_new(&path, file.to_file_string().as_bytes()) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                st.docs.get_mut(&doc_id).expect("queued").1 = DocState::Done;
                return Err(ServiceError::AlreadyExported { doc_id });
            }
            Err(e) => return Err(io_err(&path, e)),
        }
        st.docs.get_mut(&doc_id).expect("queued").1 = DocState::Done;
        for s in &file.sentences {
            *st.histogram.entry(s.label).or_default() += 1;
        }
        let next = self.checkout(&mut st, session_id);
        let has_next = next.is_some();
        Self::attach(&mut st, session_id, next);
        Ok(CompleteResult {
            exported: path.display().to_string(),
            next: if has_next {
                Some(Self::view(&st, session_id)?)
            } else {
                None
            },
        })
    }

    /// Current state of a session, for clients reloading mid-document.
    pub fn session(&self, session_id: &str) -> Result<SessionView, ServiceError> {
        let mut st = self.lock();
        self.expire(&mut st);
        Self::view(&st, session_id)
    }

    pub fn progress(&self) -> Progress {
        let mut st = self.lock();
        self.expire(&mut st);
        let mut p = Progress {
            pending: 0,
            checked_out: 0,
            done: 0,
            histogram: st.histogram.clone(),
        };
        for (_, state) in st.docs.values() {
            match state {
                DocState::Pending => p.pending += 1,
                DocState::CheckedOut { .. } => p.checked_out += 1,
                DocState::Done => p.done += 1,
            }
        }
        p
    }

    pub fn export_dir(&self) -> &Path {
        &self.export_dir
    }
}
