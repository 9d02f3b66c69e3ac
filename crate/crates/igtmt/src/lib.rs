//! Config-driven translation experiments over interlinear glossed text:
//! run configuration, the experiment runner, reports and golden files.

use std::path::PathBuf;

use igtmt_core::corpus::CorpusError;
use igtmt_core::metrics::MetricError;
use igtmt_core::prompt::PromptError;
use igtmt_llm::LlmError;

pub mod config;
pub mod dictionary;
pub mod goldens;
pub mod report;
pub mod runner;

pub use config::{BackendKind, CorpusFormat, CorpusSource, MetricName, RunConfig};
pub use igtmt_core::prompt::Strategy;
pub use report::{emit_report, render_report, ReportFormat};
pub use runner::{ablate_nshot, compare_runs, run_experiment, EntryResult, RunResult, Runner, SignificanceRow};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Corpus {
        path: PathBuf,
        #[source]
        source: CorpusError,
    },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("{failed} of {total} entries failed; first error: {first_error}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first_error: String,
        result: Box<RunResult>,
    },
    #[error("{0}")]
    Mismatch(String),
}
