use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit can report. Variants name the module that
/// raised them so CLI diagnostics point at the failing stage.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("corpus: {}:{line}: {msg}", path.display())]
    MalformedRow {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("corpus: duplicate paragraph id `{0}`")]
    DuplicateId(String),

    #[error("corpus: {0}")]
    InvalidParagraph(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("textprep: paragraphs tokenize to zero tokens: {}", .0.join(", "))]
    EmptyParagraphs(Vec<String>),

    #[error("textprep: {}:{line}: {msg}", path.display())]
    MalformedEmbedding {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("nncore: shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("nncore: {0}")]
    Graph(String),

    #[error("nncore: non-finite gradient in parameter `{0}`")]
    NonFiniteGradient(String),

    #[error("imbalance: {0}")]
    Imbalance(String),

    #[error("models: non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("models: vocabulary fingerprint mismatch (model expects {expected}, got {found})")]
    VocabMismatch { expected: String, found: String },

    #[error("models: {0}")]
    Model(String),

    #[error("models: unsupported model file version {found} (this build reads up to {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("models: checksum mismatch, model file is truncated or corrupted")]
    Checksum,

    #[error("ensemble: {0}")]
    Ensemble(String),

    #[error("metrics: {0}")]
    Metrics(String),

    #[error("metrics: ids missing from predictions: [{}]; ids not in gold: [{}]", .missing.join(", "), .extra.join(", "))]
    IdMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },
}

impl Error {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn malformed(path: &Path, line: usize, msg: impl Into<String>) -> Self {
        Error::MalformedRow {
            path: path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }
}
