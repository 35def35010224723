use super::*;
use crate::benchmarks::{make_dataset, DatasetConfig, Problem, TrajectoryDataset};
use crate::flux::{Epoch, Stabilizers};
use crate::fv::{BoundaryKind, GridField, StepSettings, WaveSpeedLog};
use crate::networks::{load_checkpoint, Architecture, LearnedLaw};
use proptest::prelude::*;

fn tiny_arch(p: usize) -> Architecture {
    Architecture { p, d: 1, potential_hidden: vec![6], entropy_hidden: vec![6, 6] }
}

fn settings(epoch: Epoch) -> StepSettings {
    StepSettings { epoch, dt: 0.01, stabilizers: Stabilizers::default() }
}

fn periodic(values: Vec<f64>, p: usize) -> GridField {
    let n = values.len() / p;
    GridField::from_values(p, vec![n], vec![0.1], vec![BoundaryKind::Periodic], values).unwrap()
}

fn tiny_dataset() -> TrajectoryDataset {
    let mut cfg = DatasetConfig::new(Problem::Burgers1d, 3, 0.0, 11);
    cfg.n = vec![16];
    cfg.steps = 3;
    cfg.window = 3;
    cfg.n_val = 2;
    make_dataset(&cfg).unwrap()
}

fn tiny_config() -> TrainConfig {
    TrainConfig {
        epochs: 1,
        n_traj: Some(2),
        batch_size: 1,
        validation: 2,
        seed: 5,
        architecture: Some(tiny_arch(1)),
        ..TrainConfig::default()
    }
}

#[test]
fn schedule_landmarks() {
    let cfg = TrainConfig::default();
    let total = 1000;
    assert!((lr_schedule(0, total, &cfg) - 5e-4).abs() < 1e-18);
    assert!((lr_schedule(100, total, &cfg) - 5e-3).abs() < 1e-18);
    let last = lr_schedule(total - 1, total, &cfg);
    assert!((last - 5e-6).abs() < 1e-7, "{last}");
    let euler = TrainConfig::for_problem(Problem::Euler);
    assert_eq!(euler.warmup, 0.05);
    assert_eq!(euler.epochs, 500);
    assert!((lr_schedule(50, total, &euler) - 5e-3).abs() < 1e-18);
}

proptest! {
    #[test]
    fn schedule_rises_then_falls(total in 20usize..2000, frac in 0.0f64..1.0) {
        let cfg = TrainConfig::default();
        let s = ((total - 1) as f64 * frac) as usize;
        let sw = (cfg.warmup * total as f64).ceil() as usize;
        let (a, b) = (lr_schedule(s, total, &cfg), lr_schedule(s + 1, total, &cfg));
        prop_assert!(a >= cfg.peak_lr / cfg.final_div * (1.0 - 1e-12) && a <= cfg.peak_lr * (1.0 + 1e-12));
        if s + 1 < sw {
            prop_assert!(b >= a);
        } else if s >= sw {
            prop_assert!(b <= a);
        }
    }
}

#[test]
fn config_validation_and_json() {
    let mut cfg = TrainConfig::default();
    assert!(cfg.validate().is_ok());
    cfg.warmup = 1.0;
    assert!(cfg.validate().is_err());
    let cfg = TrainConfig { n_traj: Some(3), batch_size: 4, ..TrainConfig::default() };
    assert!(cfg.validate().is_err());
    let cfg = TrainConfig { final_div: 1.0, ..TrainConfig::default() };
    assert!(cfg.validate().is_err());
    let cfg = TrainConfig::for_problem(Problem::ShallowWater);
    let back: TrainConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(back, cfg);
    let partial: TrainConfig = serde_json::from_str(r#"{"epochs": 7, "N_b": 2}"#).unwrap();
    assert_eq!((partial.epochs, partial.batch_size, partial.peak_lr), (7, 2, 5e-3));
    assert!(serde_json::from_str::<TrainConfig>(r#"{"epochz": 7}"#).is_err());
    assert_eq!(TrainConfig { epochs: 3, batch_size: 4, ..TrainConfig::default() }.total_steps(10), 9);
}

#[test]
fn adam_basics() {
    let hp = AdamParams::default();
    let mut p = vec![0.3, -1.0];
    let mut s = AdamState::new(2);
    adam_update(&mut p, &[0.0, 0.0], &mut s, 0.1, hp);
    assert_eq!(p, vec![0.3, -1.0]);

    let mut p = vec![0.0];
    let mut s = AdamState::new(1);
    adam_update(&mut p, &[1.0], &mut s, 1e-3, hp);
    assert!((p[0] + 1e-3 / (1.0 + 1e-8)).abs() < 1e-18);

    let (m1, v1) = (s.m[0], s.v[0]);
    for _ in 0..5 {
        adam_update(&mut p, &[0.0], &mut s, 1e-3, hp);
    }
    assert!((s.m[0] / (m1 * 0.9f64.powi(5)) - 1.0).abs() < 1e-14);
    assert!((s.v[0] / (v1 * 0.999f64.powi(5)) - 1.0).abs() < 1e-14);
    assert_eq!(s.step, 6);
}

#[test]
fn adam_step_keeps_entropy_convex() {
    let mut model = LearnedLaw::new(tiny_arch(2), 1);
    let n = model.n_params();
    let grads: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 5.0 } else { -5.0 }).collect();
    let mut s = AdamState::new(n);
    for _ in 0..20 {
        adam_step(&mut model, &grads, &mut s, 0.5, AdamParams::default());
        assert!(model.entropy.is_projected());
    }
}

#[test]
fn rollout_edge_cases() {
    let model = LearnedLaw::new(tiny_arch(2), 4);
    let u0 = periodic((0..24).map(|i| 1.0 + 0.3 * (i as f64 * 0.9).sin()).collect(), 2);
    let none = rollout(&model, &u0, 0, &settings(Epoch::Evaluation)).unwrap();
    assert_eq!(none, vec![u0.clone()]);
    let c = periodic([0.7, -0.2].repeat(12), 2);
    let flat = rollout(&model, &c, 5, &settings(Epoch::Training(1))).unwrap();
    assert!(flat.iter().all(|f| f.values == c.values));
    let traj = rollout(&model, &u0, 20, &settings(Epoch::Evaluation)).unwrap();
    let t0 = u0.totals();
    for f in &traj {
        for (a, b) in f.totals().iter().zip(&t0) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }
}

#[test]
fn loss_normalization() {
    let model = LearnedLaw::new(tiny_arch(1), 2);
    let s = settings(Epoch::Evaluation);
    let u0 = periodic((0..12).map(|i| 0.5 + 0.4 * (i as f64).cos()).collect(), 1);
    let own = Window::new(&rollout(&model, &u0, 3, &s).unwrap());
    assert_eq!(recurrent_loss(&model, &[&own], &s).unwrap(), 0.0);

    // a zero start stays zero, so every later frame counts fully
    let later: Vec<GridField> = (1..4).map(|l| periodic((0..12).map(|i| (i * l) as f64 - 5.0).collect(), 1)).collect();
    let mut frames = vec![periodic(vec![0.0; 12], 1)];
    frames.extend(later.iter().cloned());
    let w0 = Window::new(&frames);
    assert!((recurrent_loss(&model, &[&w0], &s).unwrap() - 1.0).abs() < 1e-15);

    // two windows with constant starts: hand-summed ratio
    let a = [periodic(vec![1.0; 12], 1), periodic(vec![2.0; 12], 1)];
    let b = [periodic(vec![-1.0; 12], 1), periodic(vec![0.5; 12], 1), periodic(vec![-3.0; 12], 1)];
    let (wa, wb) = (Window::new(&a), Window::new(&b));
    let num = 12.0 * (1.0 + 1.5 + 2.0);
    let den = 12.0 * (1.0 + 2.0 + 1.0 + 0.5 + 3.0);
    assert!((recurrent_loss(&model, &[&wa, &wb], &s).unwrap() - num / den).abs() < 1e-15);

    let zero = Window::new(&[periodic(vec![0.0; 12], 1), periodic(vec![0.0; 12], 1)]);
    assert!(matches!(recurrent_loss(&model, &[&zero], &s), Err(TrainError::ZeroDenominator)));
}

/// Adds a deterministic perturbation to every parameter and re-projects.
fn kicked(mut model: LearnedLaw, size: f64) -> LearnedLaw {
    let flat: Vec<f64> = model.flatten().iter().enumerate().map(|(i, v)| v + size * (i as f64 * 1.7).sin()).collect();
    model.load_flat(&flat).unwrap();
    model.project();
    model
}

#[test]
fn loss_gradient_matches_frozen_speed_differences() {
    let model = kicked(LearnedLaw::new(tiny_arch(2), 9), 0.1);
    let s = StepSettings { dt: 0.03, ..settings(Epoch::Training(2)) };
    let u0 = periodic((0..20).map(|i| 1.2 + 0.3 * (i as f64 * 0.7).sin()).collect(), 2);
    let frames: Vec<GridField> = (0..3)
        .map(|l| u0.with_values(u0.values.iter().enumerate().map(|(i, v)| v + 0.05 * ((i + l) as f64).cos()).collect()))
        .collect();
    let w = Window::new(&frames);
    let (loss, grad) = loss_and_gradient(&model, &[&w], &s).unwrap();
    let mut log = WaveSpeedLog::recording();
    let base = window_terms(&model, &w, &s, Some(&mut log)).unwrap();
    assert!((base.mismatch / base.magnitude - loss).abs() < 1e-15);
    let entries = log.into_entries();
    let flat = model.flatten();
    let eval = |theta: &[f64]| {
        let mut m = model.clone();
        m.load_flat(theta).unwrap();
        let mut replay = WaveSpeedLog::replaying(entries.clone());
        let t = window_terms(&m, &w, &s, Some(&mut replay)).unwrap();
        t.mismatch / t.magnitude
    };
    let mut worst: f64 = 0.0;
    for i in 0..flat.len() {
        // fourth-order central difference; the parameters sit away from the
        // huber kink so the loss is smooth in every direction
        let h = 1e-3;
        let at = |k: f64| {
            let mut th = flat.clone();
            th[i] += k * h;
            eval(&th)
        };
        let fd = (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * h);
        if grad[i].abs().max(fd.abs()) <= 1e-12 {
            // output offsets of both networks cannot reach the loss
            continue;
        }
        let r = (fd - grad[i]).abs() / grad[i].abs().max(fd.abs());
        worst = worst.max(r);
    }
    assert!(worst <= 1e-5, "worst relative error {worst:e}");
}

#[test]
fn training_run_writes_reloadable_checkpoints() {
    let data = tiny_dataset();
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config();
    let mut seen = 0;
    let summary = train(&data, &cfg, dir.path(), |_| seen += 1).unwrap();
    assert_eq!(seen, 1);
    let (model, meta) = load_checkpoint(&dir.path().join("best.json")).unwrap();
    let info: CheckpointInfo = serde_json::from_value(meta.info).unwrap();
    assert_eq!(info.problem, Problem::Burgers1d);
    let windows: Vec<Window> = data.validation_indices().map(|k| Window::from_dataset(&data, k).unwrap()).collect();
    let batch: Vec<&Window> = windows.iter().collect();
    let eval = StepSettings { epoch: Epoch::Evaluation, dt: data.manifest.dt, stabilizers: Stabilizers::default() };
    let val = recurrent_loss(&model, &batch, &eval).unwrap();
    assert!((val - info.val_loss).abs() <= 1e-15);
    assert!((val - summary.best_val_loss).abs() <= 1e-15);
    let log = std::fs::read_to_string(dir.path().join("train_log.csv")).unwrap();
    assert_eq!(log.lines().next(), Some(LOG_HEADER));
    assert_eq!(log.lines().count(), 2);
    assert!(dir.path().join("final.json").exists() && dir.path().join("final.f64").exists());
}

#[test]
fn training_is_deterministic_and_tracks_best() {
    let data = tiny_dataset();
    let cfg = TrainConfig { epochs: 3, ..tiny_config() };
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let s1 = train(&data, &cfg, d1.path(), |_| {}).unwrap();
    train(&data, &cfg, d2.path(), |_| {}).unwrap();
    for f in ["final.f64", "best.f64", "best.json"] {
        assert_eq!(std::fs::read(d1.path().join(f)).unwrap(), std::fs::read(d2.path().join(f)).unwrap(), "{f}");
    }
    let min = s1.history.iter().map(|h| h.val_loss).fold(f64::INFINITY, f64::min);
    assert_eq!(s1.best_val_loss, min);
    assert_eq!(s1.history[s1.best_epoch - 1].val_loss, min);
}

#[test]
fn non_finite_data_aborts_and_keeps_last_good() {
    let mut data = tiny_dataset();
    data.windows[0][20] = f64::NAN;
    data.windows[1][20] = f64::NAN;
    let dir = tempfile::tempdir().unwrap();
    let err = train(&data, &tiny_config(), dir.path(), |_| {}).unwrap_err();
    assert!(matches!(err, TrainError::NonFinite { epoch: 1 }), "{err}");
    assert!(dir.path().join("last_good.json").exists());
    load_checkpoint(&dir.path().join("last_good.json")).unwrap();
}
