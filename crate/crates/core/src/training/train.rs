use std::fs::{self, File};
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamParams, AdamState};
use super::config::{lr_schedule, TrainConfig};
use super::loss::{loss_and_gradient, recurrent_loss, Window};
use super::TrainError;
use crate::benchmarks::{Problem, TrajectoryDataset};
use crate::flux::{Epoch, Stabilizers};
use crate::fv::StepSettings;
use crate::networks::{save_checkpoint, Architecture, LearnedLaw};

pub const LOG_HEADER: &str = "epoch,train_loss,val_loss,lr,seconds";

/// What a checkpoint records about the data it was trained on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointInfo {
    pub problem: Problem,
    pub n: Vec<usize>,
    pub dt: f64,
    pub g: f64,
    pub xi: f64,
    pub epoch: usize,
    pub val_loss: f64,
    pub stabilizers: Stabilizers,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lr: f64,
    pub seconds: f64,
}

impl EpochLog {
    pub fn csv_line(&self) -> String {
        format!("{},{},{},{},{}", self.epoch, self.train_loss, self.val_loss, self.lr, self.seconds)
    }
}

#[derive(Clone, Debug)]
pub struct TrainSummary {
    pub model: LearnedLaw,
    pub best_val_loss: f64,
    pub best_epoch: usize,
    pub history: Vec<EpochLog>,
}

fn map_window(e: TrainError, ids: &[usize]) -> TrainError {
    match e {
        TrainError::Window { window, source } => TrainError::Window { window: ids[window], source },
        other => other,
    }
}

/// Trains on `data` and writes `best.json`, `final.json` (with their `.f64`
/// parameter files) and `train_log.csv` to `out_dir`. On a non-finite loss
/// the parameters before the failing step go to `last_good.json` and the
/// error is returned.
pub fn train(
    data: &TrajectoryDataset,
    cfg: &TrainConfig,
    out_dir: &Path,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainSummary, TrainError> {
    cfg.validate()?;
    let m = &data.manifest;
    let n_traj = cfg.n_traj.unwrap_or(m.n_traj);
    if n_traj == 0 || n_traj > m.n_traj {
        return Err(TrainError::Config(format!("N_traj = {n_traj}, dataset has {} training windows", m.n_traj)));
    }
    if cfg.batch_size > n_traj {
        return Err(TrainError::Config(format!("batch size {} exceeds N_traj = {n_traj}", cfg.batch_size)));
    }
    let val_ids: Vec<usize> = data.validation_indices().take(cfg.validation).collect();
    if val_ids.is_empty() {
        return Err(TrainError::Config("dataset has no validation windows".into()));
    }
    let windows: Vec<Window> =
        (0..data.n_windows()).map(|k| Window::from_dataset(data, k)).collect::<Result<_, _>>()?;
    let val_batch: Vec<&Window> = val_ids.iter().map(|&k| &windows[k]).collect();

    fs::create_dir_all(out_dir)?;
    let arch = cfg.architecture.clone().unwrap_or_else(|| Architecture::default_for(m.p, m.d));
    if arch.p != m.p || arch.d != m.d {
        return Err(TrainError::Config(format!(
            "architecture is for p={}, d={}; data has p={}, d={}",
            arch.p, arch.d, m.p, m.d
        )));
    }
    let mut model = LearnedLaw::new(arch, cfg.seed);
    let mut adam = AdamState::new(model.n_params());
    let hp = AdamParams { beta1: cfg.beta1, beta2: cfg.beta2, eps: cfg.eps_adam };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let total = cfg.total_steps(n_traj);
    let info = |epoch: usize, val_loss: f64| {
        let i = CheckpointInfo {
            problem: m.problem,
            n: m.n.clone(),
            dt: m.dt,
            g: m.g,
            xi: m.xi,
            epoch,
            val_loss,
            stabilizers: cfg.stabilizers,
        };
        serde_json::to_value(i).expect("plain data serializes")
    };

    let mut log = File::create(out_dir.join("train_log.csv"))?;
    writeln!(log, "{LOG_HEADER}")?;
    let mut order: Vec<usize> = (0..n_traj).collect();
    let mut step = 0;
    let mut best = f64::INFINITY;
    let mut best_epoch = 0;
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        let settings = StepSettings { epoch: Epoch::Training(epoch as u32), dt: m.dt, stabilizers: cfg.stabilizers };
        order.shuffle(&mut rng);
        let mut losses = Vec::new();
        let mut lr = 0.0;
        for ids in order.chunks(cfg.batch_size) {
            let batch: Vec<&Window> = ids.iter().map(|&k| &windows[k]).collect();
            let result = loss_and_gradient(&model, &batch, &settings).map_err(|e| map_window(e, ids));
            let (loss, grad) = match result {
                Ok((l, g)) if l.is_finite() && g.iter().all(|v| v.is_finite()) => (l, g),
                Ok(_) => {
                    save_checkpoint(&model, info(epoch - 1, best), &out_dir.join("last_good.json"))?;
                    return Err(TrainError::NonFinite { epoch });
                }
                Err(e @ (TrainError::Window { .. } | TrainError::Rollout { .. })) => {
                    save_checkpoint(&model, info(epoch - 1, best), &out_dir.join("last_good.json"))?;
                    return Err(e);
                }
                Err(e) => return Err(e),
            };
            lr = lr_schedule(step, total, cfg);
            adam_step(&mut model, &grad, &mut adam, lr, hp);
            step += 1;
            losses.push(loss);
        }
        let train_loss = losses.iter().sum::<f64>() / losses.len() as f64;
        let eval = StepSettings { epoch: Epoch::Evaluation, ..settings };
        let val_loss = match recurrent_loss(&model, &val_batch, &eval) {
            Ok(v) if v.is_finite() => v,
            other => {
                save_checkpoint(&model, info(epoch, f64::NAN), &out_dir.join("last_good.json"))?;
                return Err(match other {
                    Err(e) => map_window(e, &val_ids),
                    Ok(_) => TrainError::NonFinite { epoch },
                });
            }
        };
        if val_loss < best {
            best = val_loss;
            best_epoch = epoch;
            save_checkpoint(&model, info(epoch, val_loss), &out_dir.join("best.json"))?;
        }
        let entry = EpochLog { epoch, train_loss, val_loss, lr, seconds: start.elapsed().as_secs_f64() };
        writeln!(log, "{}", entry.csv_line())?;
        log.flush()?;
        on_epoch(&entry);
        history.push(entry);
    }
    let last_val = history.last().map(|h| h.val_loss).unwrap_or(f64::NAN);
    save_checkpoint(&model, info(cfg.epochs, last_val), &out_dir.join("final.json"))?;
    Ok(TrainSummary { model, best_val_loss: best, best_epoch, history })
}
