//! Batch front end for the Hilfer IVP solver: problem files in, CSV out.

pub mod problem;
pub mod run;
pub mod study;

use std::path::PathBuf;

use hilfer_core::HilferError;
use thiserror::Error;

pub use problem::{parse_problem, parse_problem_str, Problem, RhsKind};
pub use run::{exit_code, run_solve, RunOutput, EXIT_PARSE};
pub use study::{convergence_study, limit_comparison, LimitRow, StudyRow};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("line {line}: {key}: {message}")]
    Parse { line: usize, key: String, message: String },

    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported study: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Solver(#[from] HilferError),
}
