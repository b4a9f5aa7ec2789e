//! Benchmark harness: grid-based basin studies, the high-dimension stress
//! protocol, performance profiles, and CSV/SVG emission.

pub mod config;
pub mod emit;
pub mod grid;
pub mod profile;
pub mod solvers;
pub mod stress;

use std::path::PathBuf;

/// Harness-level error type.
#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no trial records supplied")]
    EmptyRecords,
    #[error("records do not cover a common problem set: {0}")]
    IncompleteMatrix(String),
    #[error("unknown solver `{0}`")]
    UnknownSolver(String),
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error(transparent)]
    Core(#[from] almton::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;

/// One (solver, problem, start) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub problem: String,
    pub start: Vec<f64>,
    pub solver: String,
    pub success: bool,
    /// Performance metric (outer iterations); infinite on failure.
    pub metric: f64,
    /// Failure-reason tag; the run status tag for successes too.
    pub reason: String,
    pub grad_norm: f64,
    pub seed: u64,
}
