use std::path::PathBuf;

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::model::ConfigIssue;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid configuration: {}", format_issues(.0))]
    Config(Vec<ConfigIssue>),
    #[error("degenerate channel for pair {pair}: left null space has dimension {null_dim}, expected {expected}")]
    DegenerateChannel {
        pair: usize,
        null_dim: usize,
        expected: usize,
    },
    #[error("degenerate design: {0}")]
    Degenerate(&'static str),
    #[error("ill-conditioned noise covariance (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Scenario(String),
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
