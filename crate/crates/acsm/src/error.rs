use std::path::PathBuf;
use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("non-triangle face at {path}:{line} ({arity} vertices)")]
    NonTriangleFace {
        path: PathBuf,
        line: usize,
        arity: usize,
    },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("inverted spherical face {face}")]
    InvertedFace { face: usize },

    #[error("objective became NaN at step {step}")]
    NanObjective { step: usize },

    #[error("no spherical face intersected for u=({0}, {1}); SphereParam is corrupted")]
    NoFaceHit(f64, f64),

    #[error("invalid rig: {0}")]
    InvalidRig(String),

    #[error("part {0} has no hard-labeled vertex")]
    EmptyPart(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resolution mismatch: {0}x{1} vs {2}x{3}")]
    ResolutionMismatch(usize, usize, usize, usize),

    #[error("empty foreground")]
    EmptyForeground,

    #[error("bad file format in {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("fit diverged at iteration {iter} (loss {loss})")]
    Diverged { iter: usize, loss: f64 },

    #[error("NaN encountered during fitting at iteration {iter}")]
    NanInFit { iter: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
