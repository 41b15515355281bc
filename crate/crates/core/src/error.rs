use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("non-uniform sampling at row {row}: step {step} differs from {expected} by more than the allowed jitter")]
    NonUniformSampling { row: usize, step: f64, expected: f64 },

    #[error("data error: non-finite value at row {row}, channel `{channel}`")]
    Data { row: usize, channel: String },

    #[error("degenerate signal: {0}")]
    Degenerate(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("index error: {0}")]
    Index(String),

    #[error("window error: {0}")]
    Window(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("history error: {0}")]
    History(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("rank-deficient regression (condition estimate {condition:e} exceeds cap {cap:e}); use a positive regularization factor")]
    RankDeficient { condition: f64, cap: f64 },

    #[error("regression failed: {0}")]
    Regression(String),

    #[error("ensemble degenerate: {failed} of {total} realizations failed to fit")]
    EnsembleDegenerate { failed: usize, total: usize },

    #[error("ensemble schema error: {0}")]
    EnsembleSchema(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("divergence overflow: reference density vanishes where the first density has mass")]
    DivergenceOverflow,

    #[error("sweep failure: {0}")]
    SweepFailure(String),

    #[error("generator error: {0}")]
    Generator(String),

    #[error("model file error: {0}")]
    ModelFormat(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
