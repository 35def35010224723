//! Recurrent-loss training of a [`LearnedLaw`](crate::networks::LearnedLaw):
//! rollouts, the normalized L1 loss and its gradient, Adam with the
//! one-cycle schedule, and the epoch loop with checkpointing.

mod adam;
mod config;
mod loss;
mod train;

pub use adam::{adam_step, adam_update, AdamParams, AdamState};
pub use config::{lr_schedule, TrainConfig};
pub use loss::{loss_and_gradient, recurrent_loss, rollout, step_values, window_terms, Window, WindowTerms};
pub use train::{train, CheckpointInfo, EpochLog, TrainSummary, LOG_HEADER};

use crate::benchmarks::BenchmarkError;
use crate::fv::FvError;
use crate::networks::NetworkError;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training setup: {0}")]
    Config(String),
    #[error("loss denominator is zero (all-zero data)")]
    ZeroDenominator,
    #[error("rollout failed at step {step}: {source}")]
    Rollout { step: usize, source: FvError },
    #[error("window {window}: {source}")]
    Window { window: usize, source: Box<TrainError> },
    #[error("non-finite loss or gradient in epoch {epoch}; last good parameters kept")]
    NonFinite { epoch: usize },
    #[error(transparent)]
    Grid(#[from] FvError),
    #[error(transparent)]
    Data(#[from] BenchmarkError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl TrainError {
    fn in_window(self, window: usize) -> Self {
        TrainError::Window { window, source: Box::new(self) }
    }
}

#[cfg(test)]
mod tests;
