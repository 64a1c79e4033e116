//! Experiment harness: JSON configs, seeded ensemble runs with CSV output,
//! the approximation and reversal studies, and the named acceptance suites.
//!
//! Every output is a function of the config (or suite options) and the
//! master seed alone: paths draw from per-index streams and all reductions
//! run in index order.

// negated comparisons are deliberate: they reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};

pub mod config;
pub mod output;
pub mod report;
pub mod simulate;
pub mod studies;
pub mod suites;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] sle4rho_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
