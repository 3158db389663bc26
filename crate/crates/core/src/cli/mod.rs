//! The `rcw` command line.
//!
//! Every stage reads from and writes to a work directory:
//!
//! ```text
//! <work>/normalized/<doc_id>.json   ingest
//! <work>/segmented/<doc_id>.json    segment
//! <work>/annotations/<doc_id>.txt   annotate serve
//! <work>/corpus/                    corpus assemble
//! <work>/split/                     corpus split
//! <work>/model.rcwm                 train
//! <work>/eval/                      eval
//! <work>/ablation/                  ablate
//! <work>/reports/                   report
//! ```
//!
//! Failures print one line `rcw: error[<kind>]: <message>` on stderr and
//! exit with 1 (data errors) or 2 (usage errors).

mod config;
mod e2e;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

pub use config::{PathSettings, PipelineConfig, ServerSettings, SplitSettings};
pub use e2e::{default_fixture_dir, run_e2e, E2eReport};

use crate::corpus::{
    self, assemble, dataset_tsv, parse_dataset_tsv, read_annotation_dir, split, Corpus, CorpusError,
    DatasetSplit, Label, SplitMode, SplitSpec,
};
use crate::evaluation::{
    distribution_report, evaluate, featurize_labeled, learning_curve, model_id, parse_size_range,
    run_experiment, EvalError, EvalReport, ExperimentReport, RunMetadata,
};
use crate::fsutil;
use crate::ingest::{extract_text, read_batch, IngestError, NormalizedDocument};
use crate::modeling::{load_model, predict_text, save_model, train_with_history, ModelError};
use crate::segmenter::{coverage_check, segment, SegmentedDocument};
use crate::service::{self, AnnotationService, ServiceConfig, ServiceError};
use crate::synth;

pub const MODEL_FILE: &str = "model.rcwm";
/// Config picked up by `e2e` from the fixture directory when no `--config`
/// is given.
pub const FIXTURE_CONFIG: &str = "rcw.toml";

#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl CliError {
    pub fn data(kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
            exit_code: 1,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            kind: "usage",
            message: message.into(),
            exit_code: 2,
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::data("config", message)
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self::data("io", format!("{}: {e}", path.display()))
    }

    /// The single stderr line for this error.
    pub fn line(&self) -> String {
        format!("rcw: error[{}]: {}", self.kind, self.message.replace('\n', " "))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

macro_rules! data_error {
    ($ty:ty, $kind:literal) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::data($kind, e.to_string())
            }
        }
    };
}
data_error!(IngestError, "ingest");
data_error!(CorpusError, "corpus");
data_error!(ModelError, "model");
data_error!(EvalError, "eval");
data_error!(ServiceError, "annotate");

#[derive(Debug, Parser)]
#[command(name = "rcw", version, about = "Resume corpus workbench")]
pub struct Cli {
    /// Pipeline config file (TOML).
    #[arg(long, global = true, env = "RCW_CONFIG")]
    pub config: Option<PathBuf>,
    /// Base seed for splitting and training.
    #[arg(long, global = true, env = "RCW_SEED")]
    pub seed: Option<u64>,
    /// Work directory holding every stage's outputs.
    #[arg(long, global = true, env = "RCW_WORK_DIR")]
    pub work_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect formats, extract and normalize text.
    Ingest {
        #[arg(long = "in", env = "RCW_INPUT_DIR")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split normalized documents into sentences.
    Segment {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Annotation service.
    #[command(subcommand)]
    Annotate(AnnotateCommand),
    /// Corpus files and splits.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Train a classifier on a `LABEL\ttext` dataset.
    Train {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Label each line of a text file.
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a model on a dataset, or with no `--model` run the multi-run
    /// experiment over the corpus.
    Eval {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Training-size learning curve on the saved split.
    Ablate {
        /// `start:end:step` (inclusive) or a comma list.
        #[arg(long, default_value = "10000:55000:5000")]
        sizes: String,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Printable reports and plot data.
    #[command(subcommand)]
    Report(ReportCommand),
    /// Run every stage on the bundled fixture corpus.
    E2e {
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
    /// Generate synthetic resumes or corpora.
    #[command(subcommand, hide = true)]
    Synth(SynthCommand),
}

#[derive(Debug, Subcommand)]
pub enum AnnotateCommand {
    /// Serve the annotation API and UI.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Directory of segmented documents.
    #[arg(long = "in", env = "RCW_ANNOTATE_IN")]
    pub input: Option<PathBuf>,
    #[arg(long, env = "RCW_EXPORT_DIR")]
    pub export: Option<PathBuf>,
    #[arg(long, env = "RCW_LISTEN")]
    pub listen: Option<String>,
    #[arg(long, env = "RCW_LEASE_SECS")]
    pub lease_secs: Option<u64>,
    #[arg(long, env = "RCW_UI_DIR")]
    pub ui_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum CorpusCommand {
    /// Merge annotation files into a manifest and sentence table.
    Assemble {
        dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Partition the corpus into train/valid/test.
    Split {
        #[arg(long, value_parser = parse_ratios, conflicts_with = "sizes")]
        ratios: Option<[f64; 3]>,
        #[arg(long, value_parser = parse_sizes)]
        sizes: Option<[usize; 3]>,
        #[arg(long)]
        stratified: bool,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print corpus size and label distribution.
    Stats {
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// Label distribution of the corpus.
    Distribution {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Confusion matrix of an eval report.
    Confusion {
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Resumes plus gold annotation files.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        docs: usize,
    },
    /// Annotation files with label shares matching the paper's corpus.
    Corpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 78_000)]
        sentences: usize,
        #[arg(long, default_value_t = 78)]
        per_doc: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
}

fn parse_triple<T: std::str::FromStr>(s: &str) -> Result<[T; 3], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated values, got {s:?}"));
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(p.parse::<T>().map_err(|_| format!("invalid value {p:?}"))?);
    }
    out.try_into().map_err(|_| "expected three values".to_string())
}

fn parse_ratios(s: &str) -> Result<[f64; 3], String> {
    parse_triple(s)
}

fn parse_sizes(s: &str) -> Result<[usize; 3], String> {
    parse_triple(s)
}

/// Resolved global settings shared by every subcommand.
pub struct Context {
    pub config: PipelineConfig,
    pub work_dir: PathBuf,
}

impl Context {
    pub fn new(config: PipelineConfig, work_dir: Option<PathBuf>, seed: Option<u64>) -> Self {
        let mut config = config;
        if let Some(s) = seed {
            config.seed = Some(s);
        }
        let work_dir = work_dir.unwrap_or_else(|| config.paths.work_dir.clone());
        Context { config, work_dir }
    }

    pub fn dir(&self, name: &str) -> PathBuf {
        self.work_dir.join(name)
    }

    pub fn export_dir(&self) -> PathBuf {
        self.config
            .paths
            .export_dir
            .clone()
            .unwrap_or_else(|| self.dir("annotations"))
    }
}

fn read_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, content: &str) -> Result<(), CliError> {
    fsutil::write_atomic(path, content.as_bytes()).map_err(|e| CliError::io(path, e))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    fsutil::write_json(path, value).map_err(|e| CliError::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&read_string(path)?)
        .map_err(|e| CliError::data("format", format!("{}: {e}", path.display())))
}

/// `*.json` files of `dir`, sorted.
fn json_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Manifest timestamp: `SOURCE_DATE_EPOCH` when set, else the newest
/// modification time among `inputs`, so unchanged inputs give identical
/// manifests.
pub fn manifest_timestamp(inputs: &[PathBuf]) -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
    {
        return t;
    }
    inputs
        .iter()
        .filter_map(|p| std::fs::metadata(p).and_then(|m| m.modified()).ok())
        .filter_map(|t| t.duration_since(UNIX_EPOCH).ok())
        .map(|d| d.as_secs())
        .max()
        .unwrap_or(0)
}

pub fn ingest_dir(input: &Path, out: &Path, log: &mut dyn Write) -> Result<Vec<NormalizedDocument>, CliError> {
    let batch = read_batch(input)?;
    let mut docs = Vec::with_capacity(batch.len());
    let mut warnings = String::new();
    for raw in &batch {
        let doc = extract_text(raw)
            .map_err(|e| CliError::data("ingest", format!("{}: {e}", input.join(&raw.source_id).display())))?;
        for w in &doc.extraction_warnings {
            let line = format!("{}\t{}\n", doc.doc_id, w);
            let _ = log.write_all(line.as_bytes());
            warnings.push_str(&line);
        }
        write_json(&out.join(format!("{}.json", doc.doc_id)), &doc)?;
        docs.push(doc);
    }
    write(&out.join("warnings.tsv"), &warnings)?;
    Ok(docs)
}

pub fn segment_dir(
    input: &Path,
    out: &Path,
    cfg: &crate::segmenter::SegmentationConfig,
    log: &mut dyn Write,
) -> Result<Vec<SegmentedDocument>, CliError> {
    let mut result = Vec::new();
    for path in json_files(input)? {
        let doc: NormalizedDocument = read_json(&path)?;
        let sentences = segment(&doc, cfg);
        let coverage = coverage_check(&doc, &sentences, cfg);
        if !coverage.is_lossless() {
            let _ = writeln!(
                log,
                "{}\tcoverage: missing {:?} unexpected {:?}",
                doc.doc_id, coverage.missing, coverage.unexpected
            );
        }
        let seg = SegmentedDocument {
            doc_id: doc.doc_id.clone(),
            sentences,
        };
        write_json(&out.join(format!("{}.json", seg.doc_id)), &seg)?;
        result.push(seg);
    }
    Ok(result)
}

/// Assembles the annotation files in `dir` into `out`. Without an explicit
/// timestamp the manifest takes the newest annotation file's.
pub fn assemble_dir(dir: &Path, out: &Path, created_unix: Option<u64>) -> Result<Corpus, CliError> {
    let files = read_annotation_dir(dir)?;
    if files.is_empty() {
        return Err(CorpusError::EmptyCorpus.into());
    }
    let inputs: Vec<PathBuf> = files.iter().map(|f| corpus::annotation_path(dir, &f.doc_id)).collect();
    let corpus = assemble(files, created_unix.unwrap_or_else(|| manifest_timestamp(&inputs)))?;
    corpus.save(out)?;
    Ok(corpus)
}

pub const SPLIT_FILE: &str = "split.json";
pub const SPLIT_PARTS: [&str; 3] = ["train.tsv", "valid.tsv", "test.tsv"];

pub fn split_corpus(
    corpus: &Corpus,
    spec: SplitSpec,
    mode: SplitMode,
    seed: u64,
    out: &Path,
) -> Result<DatasetSplit, CliError> {
    let parts = split(&corpus.sentences, spec, mode, seed)?;
    let materialized = parts.materialize(&corpus.sentences)?;
    for (name, part) in SPLIT_PARTS.iter().zip(&materialized) {
        write(&out.join(name), &dataset_tsv(part))?;
    }
    write_json(&out.join(SPLIT_FILE), &parts)?;
    Ok(parts)
}

pub fn read_dataset(path: &Path) -> Result<Vec<(String, Label)>, CliError> {
    let content = read_string(path)?;
    Ok(parse_dataset_tsv(&path.display().to_string(), &content)?)
}

fn print_eval(out: &mut dyn Write, name: &str, r: &EvalReport) {
    let _ = writeln!(out, "{name}\tf1_micro={:.4}\tn={}", r.f1_micro, r.n_examples);
}

/// Parses `argv` and runs the command, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(cli, &mut std::io::stdout(), &mut std::io::stderr()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.line());
            e.exit_code
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write, log: &mut dyn Write) -> Result<(), CliError> {
    let config = match (&cli.config, &cli.command) {
        (Some(p), _) => PipelineConfig::load(p)?,
        (None, Command::E2e { fixtures }) => {
            let path = fixtures.clone().unwrap_or_else(default_fixture_dir).join(FIXTURE_CONFIG);
            if path.is_file() {
                PipelineConfig::load(&path)?
            } else {
                PipelineConfig::default()
            }
        }
        (None, _) => PipelineConfig::default(),
    };
    let ctx = Context::new(config, cli.work_dir, cli.seed);
    let cfg = &ctx.config;
    let seed = cfg.effective_seed();
    let runs_or = |r: Option<usize>| r.unwrap_or(cfg.split.runs);

    match cli.command {
        Command::Ingest { input, out: dest } => {
            let input = input.unwrap_or_else(|| cfg.paths.input_dir.clone());
            let dest = dest.unwrap_or_else(|| ctx.dir("normalized"));
            let docs = ingest_dir(&input, &dest, log)?;
            let _ = writeln!(out, "ingested {} documents into {}", docs.len(), dest.display());
        }
        Command::Segment { input, out: dest } => {
            let input = input.unwrap_or_else(|| ctx.dir("normalized"));
            let dest = dest.unwrap_or_else(|| ctx.dir("segmented"));
            let docs = segment_dir(&input, &dest, &cfg.segmentation, log)?;
            let n: usize = docs.iter().map(|d| d.sentences.len()).sum();
            let _ = writeln!(out, "segmented {} documents into {n} sentences", docs.len());
        }
        Command::Annotate(AnnotateCommand::Serve(args)) => {
            let svc_cfg = ServiceConfig {
                input_dir: args.input.unwrap_or_else(|| ctx.dir("segmented")),
                export_dir: args.export.unwrap_or_else(|| ctx.export_dir()),
                lease: Duration::from_secs(args.lease_secs.unwrap_or(cfg.server.lease_secs)),
            };
            let listen = args.listen.unwrap_or_else(|| cfg.server.listen.clone());
            let addr = listen
                .parse()
                .map_err(|_| CliError::usage(format!("invalid listen address {listen:?}")))?;
            let svc = Arc::new(AnnotationService::open(&svc_cfg)?);
            let ui = args.ui_dir.or_else(|| cfg.server.ui_dir.clone());
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::data("io", e.to_string()))?;
            rt.block_on(service::serve(svc, addr, ui))
                .map_err(|e| CliError::data("io", format!("{listen}: {e}")))?;
        }
        Command::Corpus(CorpusCommand::Assemble { dir, out: dest }) => {
            let dir = dir.unwrap_or_else(|| ctx.export_dir());
            let dest = dest.unwrap_or_else(|| ctx.dir("corpus"));
            let c = assemble_dir(&dir, &dest, None)?;
            let _ = writeln!(
                out,
                "corpus {}: {} documents, {} sentences",
                c.manifest.corpus_id,
                c.manifest.documents.len(),
                c.manifest.total_sentences
            );
        }
        Command::Corpus(CorpusCommand::Split {
            ratios,
            sizes,
            stratified,
            corpus,
            out: dest,
        }) => {
            let spec = match (ratios, sizes) {
                (Some(r), _) => SplitSpec::Ratios(r),
                (None, Some(s)) => SplitSpec::Sizes(s),
                (None, None) => cfg.split.spec(),
            };
            let mode = if stratified { SplitMode::Stratified } else { cfg.split.mode() };
            let c = Corpus::load(&corpus.unwrap_or_else(|| ctx.dir("corpus")))?;
            let dest = dest.unwrap_or_else(|| ctx.dir("split"));
            let parts = split_corpus(&c, spec, mode, seed, &dest)?;
            let [a, b, t] = parts.sizes();
            let _ = writeln!(out, "train={a}\tvalid={b}\ttest={t}\tseed={seed}");
        }
        Command::Corpus(CorpusCommand::Stats { corpus }) => {
            let c = Corpus::load(&corpus.unwrap_or_else(|| ctx.dir("corpus")))?;
            let labels: Vec<Label> = c.sentences.iter().map(|s| s.label).collect();
            let _ = writeln!(
                out,
                "corpus {}: {} documents, {} sentences",
                c.manifest.corpus_id,
                c.manifest.documents.len(),
                c.manifest.total_sentences
            );
            let _ = write!(out, "{}", distribution_report(&labels)?.render_table());
        }
        Command::Train { input, out: dest } => {
            let input = input.unwrap_or_else(|| ctx.dir("split").join(SPLIT_PARTS[0]));
            let dest = dest.unwrap_or_else(|| ctx.dir(MODEL_FILE));
            let tc = cfg.train_config();
            let examples = featurize_labeled(&read_dataset(&input)?, tc.dim);
            let (model, history) = train_with_history(&examples, &tc)?;
            for (epoch, l) in history.iter().enumerate() {
                let _ = writeln!(log, "epoch {epoch}\tloss {l:.6}");
            }
            save_model(&model, &dest)?;
            let _ = writeln!(out, "model {} trained on {} examples -> {}", model_id(&model), examples.len(), dest.display());
        }
        Command::Predict { model, input, out: dest } => {
            let m = load_model(&model.unwrap_or_else(|| ctx.dir(MODEL_FILE)))?;
            let text = read_string(&input)?;
            let mut result = String::new();
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let p = predict_text(&m, line);
                result.push_str(&format!("{}\t{}\n", p.label, corpus::sanitize_text(line)));
            }
            match dest {
                Some(p) => write(&p, &result)?,
                None => {
                    let _ = out.write_all(result.as_bytes());
                }
            }
        }
        Command::Eval { model: Some(model), input, runs: _, out: dest } => {
            let m = load_model(&model)?;
            let input = input.unwrap_or_else(|| ctx.dir("split").join(SPLIT_PARTS[2]));
            let examples = featurize_labeled(&read_dataset(&input)?, m.dim);
            let split_id = input
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let meta = RunMetadata {
                seed: m.meta.seed,
                model_id: model_id(&m),
                split_id,
            };
            let report = evaluate(&m, &examples, meta)?;
            let dest = dest.unwrap_or_else(|| ctx.dir("eval"));
            write_json(&dest.join("report.json"), &report)?;
            write(&dest.join("confusion.tsv"), &report.confusion.to_tsv())?;
            print_eval(out, &input.display().to_string(), &report);
        }
        Command::Eval { model: None, input: _, runs, out: dest } => {
            let c = Corpus::load(&ctx.dir("corpus"))?;
            let tc = cfg.train_config();
            let report = run_experiment(&c.sentences, cfg.split.spec(), cfg.split.mode(), &tc, runs_or(runs))?;
            let dest = dest.unwrap_or_else(|| ctx.dir("eval"));
            report.persist(&dest)?;
            for r in &report.runs {
                let _ = writeln!(out, "run {}\tseed={}\tvalid={:.4}\ttest={:.4}", r.run_index, r.seed, r.valid.f1_micro, r.test.f1_micro);
            }
            let _ = writeln!(out, "mean\tvalid={:.4}\ttest={:.4}", report.mean_valid_f1, report.mean_test_f1);
        }
        Command::Ablate { sizes, runs, out: dest } => {
            let sizes = parse_size_range(&sizes).map_err(|e| CliError::usage(e.to_string()))?;
            let tc = cfg.train_config();
            let split_dir = ctx.dir("split");
            let load = |i: usize| -> Result<_, CliError> {
                Ok(featurize_labeled(&read_dataset(&split_dir.join(SPLIT_PARTS[i]))?, tc.dim))
            };
            let (pool, valid, test) = (load(0)?, load(1)?, load(2)?);
            let curve = learning_curve(&pool, &valid, &test, &sizes, &tc, runs_or(runs))?;
            let dest = dest.unwrap_or_else(|| ctx.dir("ablation"));
            write_json(&dest.join("curve.json"), &curve)?;
            write(&dest.join("curve.tsv"), &curve.to_tsv())?;
            for p in &curve.points {
                let _ = writeln!(out, "size {}\tvalid={:.4}\ttest={:.4}", p.train_size, p.mean_valid_f1, p.mean_test_f1);
            }
        }
        Command::Report(ReportCommand::Distribution { corpus, out: dest }) => {
            let c = Corpus::load(&corpus.unwrap_or_else(|| ctx.dir("corpus")))?;
            let labels: Vec<Label> = c.sentences.iter().map(|s| s.label).collect();
            let r = distribution_report(&labels)?;
            let dest = dest.unwrap_or_else(|| ctx.dir("reports"));
            write_json(&dest.join("distribution.json"), &r)?;
            write(&dest.join("distribution.tsv"), &r.plot_tsv())?;
            let _ = write!(out, "{}", r.render_table());
        }
        Command::Report(ReportCommand::Confusion { report, out: dest }) => {
            let path = report.unwrap_or_else(|| ctx.dir("eval").join("report.json"));
            let matrix = load_confusion(&path)?;
            let dest = dest.unwrap_or_else(|| ctx.dir("reports"));
            write(&dest.join("confusion.tsv"), &matrix.to_tsv())?;
            let _ = write!(out, "{}", render_confusion(&matrix));
        }
        Command::E2e { fixtures } => {
            let fixtures = fixtures.unwrap_or_else(default_fixture_dir);
            let report = run_e2e(&fixtures, &ctx.dir("e2e"), cfg, log)?;
            print_eval(out, "valid", &report.valid);
            print_eval(out, "test", &report.test);
        }
        Command::Synth(SynthCommand::Fixtures { out: dest, docs }) => {
            synth::write_fixture_set(&dest, docs, seed).map_err(|e| CliError::io(&dest, e))?;
            let _ = writeln!(out, "wrote {docs} resumes to {}", dest.display());
        }
        Command::Synth(SynthCommand::Corpus { out: dest, sentences, per_doc, noise }) => {
            let all = synth::corpus(sentences, &synth::PAPER_PROPORTIONS, per_doc, noise, seed);
            let mut start = 0;
            while start < all.len() {
                let doc_id = all[start].doc_id.clone();
                let end = all[start..].iter().position(|s| s.doc_id != doc_id).map_or(all.len(), |p| start + p);
                let file = corpus::ResumeAnnotationFile::from_labeled(
                    doc_id,
                    all[start..end].iter().map(|s| (s.text.as_str(), s.label)),
                );
                corpus::write_annotation_file(&dest, &file)?;
                start = end;
            }
            let _ = writeln!(out, "wrote {sentences} sentences to {}", dest.display());
        }
    }
    Ok(())
}

/// Confusion counts from an eval report, or pooled over the test sets of
/// every run of an experiment report.
pub fn load_confusion(path: &Path) -> Result<crate::evaluation::ConfusionMatrix, CliError> {
    let raw = read_string(path)?;
    if let Ok(r) = serde_json::from_str::<EvalReport>(&raw) {
        return Ok(r.confusion);
    }
    let r: ExperimentReport = serde_json::from_str(&raw)
        .map_err(|e| CliError::data("format", format!("{}: {e}", path.display())))?;
    let mut m = crate::evaluation::ConfusionMatrix::default();
    for run in &r.runs {
        for (row, add) in m.counts.iter_mut().zip(&run.test.confusion.counts) {
            for (c, a) in row.iter_mut().zip(add) {
                *c += a;
            }
        }
    }
    Ok(m)
}

pub fn render_confusion(m: &crate::evaluation::ConfusionMatrix) -> String {
    let mut s = format!("{:<14}", "truth\\pred");
    for l in Label::ALL {
        s.push_str(&format!("{:>14}", l.token()));
    }
    s.push('\n');
    for t in Label::ALL {
        s.push_str(&format!("{:<14}", t.token()));
        for p in Label::ALL {
            s.push_str(&format!("{:>14}", m.get(t, p)));
        }
        s.push('\n');
    }
    s
}
