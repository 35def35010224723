use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::initial::sample_initial_condition;
use super::problems::{Problem, DEFAULT_GRAVITY};
use super::reference::reference_solve;
use super::BenchmarkError;
use crate::fv::GridField;

/// Validation windows generated next to the training windows.
pub const VALIDATION_WINDOWS: usize = 40;
/// RNG stream reserved for observation noise; trajectory `k` uses stream `k`.
pub const NOISE_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub problem: Problem,
    pub n: Vec<usize>,
    pub dt: f64,
    /// Simulated steps per trajectory.
    pub steps: usize,
    /// Steps per stored window.
    pub window: usize,
    pub n_traj: usize,
    pub n_val: usize,
    pub xi: f64,
    pub g: f64,
    pub seed: u64,
}

impl DatasetConfig {
    /// Full-scale grid and horizon for `problem`.
    pub fn new(problem: Problem, n_traj: usize, xi: f64, seed: u64) -> Self {
        let d = problem.defaults();
        DatasetConfig {
            problem,
            n: d.n,
            dt: d.dt,
            steps: d.steps,
            window: d.window,
            n_traj,
            n_val: VALIDATION_WINDOWS,
            xi,
            g: DEFAULT_GRAVITY,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), BenchmarkError> {
        if self.window > self.steps {
            return Err(BenchmarkError::Config(format!("L_train = {} exceeds L = {}", self.window, self.steps)));
        }
        if !(0.0..=1.0).contains(&self.xi) {
            return Err(BenchmarkError::Config(format!("noise level {} outside [0, 1]", self.xi)));
        }
        if !(self.dt > 0.0) || !(self.g > 0.0) {
            return Err(BenchmarkError::Config("dt and g must be positive".into()));
        }
        self.problem.spacing(&self.n)?;
        Ok(())
    }
}

/// Contents of `manifest.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub problem: Problem,
    pub p: usize,
    pub d: usize,
    pub n: Vec<usize>,
    pub dx: Vec<f64>,
    pub dt: f64,
    #[serde(rename = "L")]
    pub steps: usize,
    #[serde(rename = "L_train")]
    pub window: usize,
    #[serde(rename = "N_traj")]
    pub n_traj: usize,
    pub xi: f64,
    pub g: f64,
    pub seed: u64,
    /// Start step of every stored window, training windows first.
    pub window_starts: Vec<usize>,
    pub component_abs_means: Vec<f64>,
}

/// Observation windows, each `[window + 1][cell][component]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryDataset {
    pub manifest: Manifest,
    pub windows: Vec<Vec<f64>>,
}

impl TrajectoryDataset {
    pub fn n_windows(&self) -> usize {
        self.windows.len()
    }

    pub fn n_cells(&self) -> usize {
        self.manifest.n.iter().product()
    }

    pub fn frame_len(&self) -> usize {
        self.n_cells() * self.manifest.p
    }

    pub fn training_indices(&self) -> std::ops::Range<usize> {
        0..self.manifest.n_traj
    }

    pub fn validation_indices(&self) -> std::ops::Range<usize> {
        self.manifest.n_traj..self.windows.len()
    }

    /// Frame `l` of window `k`, cell-major.
    pub fn frame(&self, k: usize, l: usize) -> &[f64] {
        let m = self.frame_len();
        &self.windows[k][l * m..(l + 1) * m]
    }

    /// Empty field on the dataset grid.
    pub fn grid(&self) -> Result<GridField, BenchmarkError> {
        self.manifest.problem.grid(&self.manifest.n)
    }

    pub fn field(&self, k: usize, l: usize) -> Result<GridField, BenchmarkError> {
        Ok(self.grid()?.with_values(self.frame(k, l).to_vec()))
    }

    pub fn save(&self, dir: &Path) -> Result<(), BenchmarkError> {
        fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(dir.join("manifest.json"), json + "\n")?;
        for (k, w) in self.windows.iter().enumerate() {
            let bytes: Vec<u8> = w.iter().flat_map(|v| v.to_le_bytes()).collect();
            fs::write(dir.join(format!("traj_{k}.f64")), bytes)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, BenchmarkError> {
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?;
        let p = manifest.problem;
        if manifest.p != p.state_dim() || manifest.d != p.space_dim() || manifest.n.len() != manifest.d {
            return Err(BenchmarkError::Format(format!("manifest shape does not match problem {p}")));
        }
        if manifest.component_abs_means.len() != manifest.p {
            return Err(BenchmarkError::Format("component_abs_means needs one entry per component".into()));
        }
        let expected = (manifest.window + 1) * manifest.n.iter().product::<usize>() * manifest.p;
        let mut windows = Vec::with_capacity(manifest.window_starts.len());
        for k in 0..manifest.window_starts.len() {
            let path = dir.join(format!("traj_{k}.f64"));
            let bytes = fs::read(&path)?;
            if bytes.len() != 8 * expected {
                return Err(BenchmarkError::Format(format!(
                    "{}: expected {} values, found {} bytes",
                    path.display(),
                    expected,
                    bytes.len()
                )));
            }
            windows.push(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect());
        }
        if manifest.window_starts.len() < manifest.n_traj {
            return Err(BenchmarkError::Format("fewer windows than N_traj".into()));
        }
        Ok(TrajectoryDataset { manifest, windows })
    }
}

/// Mean of `|u_c|` per component over every value of every window.
pub fn component_abs_means(windows: &[Vec<f64>], p: usize) -> Vec<f64> {
    let mut sum = vec![0.0; p];
    let mut count = 0usize;
    for w in windows {
        for cell in w.chunks_exact(p) {
            for (s, v) in sum.iter_mut().zip(cell) {
                *s += v.abs();
            }
            count += 1;
        }
    }
    sum.iter().map(|s| if count > 0 { s / count as f64 } else { 0.0 }).collect()
}

/// Adds `xi * scale_c * N(0, 1)` to every value of component `c`.
/// `xi = 0` leaves the data untouched.
pub fn inject_noise<R: Rng + ?Sized>(data: &mut [f64], scale: &[f64], xi: f64, rng: &mut R) {
    if xi == 0.0 {
        return;
    }
    let p = scale.len();
    for cell in data.chunks_exact_mut(p) {
        for (v, s) in cell.iter_mut().zip(scale) {
            let z: f64 = rng.sample(StandardNormal);
            *v += xi * s * z;
        }
    }
}

fn trajectory_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Simulates `n_traj + n_val` windows of the reference solution and adds
/// observation noise.
pub fn make_dataset(cfg: &DatasetConfig) -> Result<TrajectoryDataset, BenchmarkError> {
    cfg.validate()?;
    let problem = cfg.problem;
    let law = problem.true_law(cfg.g);
    let total = cfg.n_traj + cfg.n_val;
    let mut windows = Vec::with_capacity(total);
    let mut starts = Vec::with_capacity(total);
    for k in 0..total {
        let mut rng = trajectory_rng(cfg.seed, k as u64);
        let (_, ic) = sample_initial_condition(problem, &cfg.n, &mut rng)?;
        let t0 = rng.random_range(0..=cfg.steps - cfg.window);
        let traj = reference_solve(&law, &ic, cfg.dt, t0 + cfg.window)
            .map_err(|e| BenchmarkError::Trajectory { index: k, source: Box::new(e) })?;
        windows.push(traj[t0..].iter().flat_map(|f| f.values.iter().copied()).collect::<Vec<f64>>());
        starts.push(t0);
    }
    let p = problem.state_dim();
    let means = component_abs_means(&windows, p);
    let mut noise = trajectory_rng(cfg.seed, NOISE_STREAM);
    for w in &mut windows {
        inject_noise(w, &means, cfg.xi, &mut noise);
    }
    let manifest = Manifest {
        problem,
        p,
        d: problem.space_dim(),
        n: cfg.n.clone(),
        dx: problem.spacing(&cfg.n)?,
        dt: cfg.dt,
        steps: cfg.steps,
        window: cfg.window,
        n_traj: cfg.n_traj,
        xi: cfg.xi,
        g: cfg.g,
        seed: cfg.seed,
        window_starts: starts,
        component_abs_means: means,
    };
    Ok(TrajectoryDataset { manifest, windows })
}
