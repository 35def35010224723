//! Benchmark problems, their reference solver, and training datasets.

mod dataset;
mod initial;
mod problems;
mod reference;

pub use dataset::{
    component_abs_means, inject_noise, make_dataset, DatasetConfig, Manifest, TrajectoryDataset, NOISE_STREAM,
    VALIDATION_WINDOWS,
};
pub use initial::{sample_initial_condition, IcParams};
pub use problems::{Problem, ProblemDefaults, TrainingDefaults, TrueLaw, DEFAULT_GRAVITY, EULER_GAMMA};
pub use reference::{cfl_number, reference_solve};

use crate::fv::FvError;

#[derive(Debug, thiserror::Error)]
pub enum BenchmarkError {
    #[error("{0}")]
    Config(String),
    #[error("CFL condition violated at step {step} (number {cfl})")]
    Cfl { step: usize, cfl: f64 },
    #[error("reference solver failed at step {step}: {source}")]
    Solver { step: usize, source: FvError },
    #[error("trajectory {index}: {source}")]
    Trajectory { index: usize, source: Box<BenchmarkError> },
    #[error(transparent)]
    Grid(#[from] FvError),
    #[error("malformed dataset: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
