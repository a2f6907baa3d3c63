//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("solve residual {residual:.3e} exceeds 1e-8 (n = {n})")]
    Residual { residual: f64, n: usize },

    #[error("MMA subproblem did not reach KKT tolerance: residual {0:.3e}")]
    MmaSubproblem(f64),

    #[error("embedding needs at least 3 samples, got {0}")]
    TooFewSamples(usize),

    #[error("embedding points are collinear; jitter them (e.g. via the experiment pipeline) before triangulating")]
    CollinearEmbedding,

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("sample ingest failed: {0}")]
    Ingest(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
