use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::benchmarks::Problem;
use crate::flux::Stabilizers;
use crate::networks::Architecture;

/// Training hyperparameters; read from and written to JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Training windows to use; `None` takes every training window of the
    /// dataset.
    #[serde(rename = "N_traj")]
    pub n_traj: Option<usize>,
    #[serde(rename = "N_b")]
    pub batch_size: usize,
    pub peak_lr: f64,
    pub initial_div: f64,
    pub final_div: f64,
    pub warmup: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_adam: f64,
    /// Validation windows to use (at most those in the dataset).
    pub validation: usize,
    pub seed: u64,
    /// Layer widths; `None` uses [`Architecture::default_for`].
    pub architecture: Option<Architecture>,
    pub stabilizers: Stabilizers,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            n_traj: None,
            batch_size: 5,
            peak_lr: 5e-3,
            initial_div: 10.0,
            final_div: 1e3,
            warmup: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            eps_adam: 1e-8,
            validation: 40,
            seed: 0,
            architecture: None,
            stabilizers: Stabilizers::default(),
        }
    }
}

impl TrainConfig {
    /// Epochs, trajectory count, batch size and warmup for `problem`.
    pub fn for_problem(problem: Problem) -> Self {
        let t = problem.training_defaults();
        TrainConfig {
            epochs: t.epochs,
            n_traj: Some(t.n_traj),
            batch_size: t.batch,
            warmup: t.warmup,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Config(m));
        if !(self.warmup > 0.0 && self.warmup < 1.0) {
            return bad(format!("warmup fraction {} not in (0, 1)", self.warmup));
        }
        if !(self.initial_div > 1.0 && self.final_div > 1.0) {
            return bad("learning-rate divisors must exceed 1".into());
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch size must be positive".into());
        }
        if let Some(n) = self.n_traj {
            if self.batch_size > n {
                return bad(format!("batch size {} exceeds N_traj = {n}", self.batch_size));
            }
        }
        if !(self.peak_lr > 0.0) || !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("peak_lr must be positive and Adam betas in [0, 1)".into());
        }
        Ok(())
    }

    /// Optimizer steps over the whole run for `n_traj` training windows.
    pub fn total_steps(&self, n_traj: usize) -> usize {
        self.epochs * n_traj.div_ceil(self.batch_size)
    }
}

/// One-cycle cosine schedule: ramps from `peak / initial_div` to `peak` over
/// the warmup fraction, then decays to `peak / final_div`.
pub fn lr_schedule(step: usize, total_steps: usize, cfg: &TrainConfig) -> f64 {
    let peak = cfg.peak_lr;
    let lo = peak / cfg.initial_div;
    let fin = peak / cfg.final_div;
    let s = step as f64;
    let total = total_steps as f64;
    let sw = cfg.warmup * total;
    if s < sw {
        lo + (peak - lo) * (1.0 - (PI * s / sw).cos()) / 2.0
    } else {
        fin + (peak - fin) * (1.0 + (PI * (s - sw) / (total - sw)).cos()) / 2.0
    }
}
