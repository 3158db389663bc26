//! Resume corpus workbench.
//!
//! Turns raw resumes into labeled sentence corpora and evaluates sentence
//! classifiers on them: format detection and text extraction ([`ingest`]),
//! rule-based segmentation ([`segmenter`]), the label taxonomy and corpus
//! files ([`corpus`]), a lease-based annotation backend ([`service`]), a
//! hashed-feature softmax classifier ([`modeling`]) and the metrics and
//! experiment harness ([`evaluation`]).

pub mod corpus;
pub mod fsutil;
pub mod ingest;
pub mod modeling;
pub mod segmenter;
pub mod evaluation;
pub mod synth;
pub mod service;
pub mod cli;
