//! Conservation and entropy remainders, relative errors, and the report
//! files written by `conslaw eval`.

mod evaluate;
mod remainders;
mod report;

pub use evaluate::{evaluate_model, EvalSetup, Evaluation};
pub use remainders::{conservation_remainder, entropy_remainder, relative_l1_error, EntropyRemainder};
pub use report::{emit_report, format_value, profile_file_name, read_series, EvalReport, Profile, ReportSummary};

use std::path::Path;

use crate::benchmarks::BenchmarkError;
use crate::training::TrainError;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("empty trajectory")]
    Empty,
    #[error("trajectories or frames have different grids")]
    GridMismatch,
    #[error("{0}")]
    Report(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Reference(#[from] BenchmarkError),
    #[error("learned rollout: {0}")]
    Rollout(#[from] TrainError),
}

impl MetricsError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        MetricsError::Io { path: path.display().to_string(), source }
    }
}
