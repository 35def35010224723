use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::BenchmarkError;
use crate::fv::{BoundaryKind, GridField, KnownFlux};

pub const EULER_GAMMA: f64 = 1.4;
pub const DEFAULT_GRAVITY: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Burgers1d,
    ShallowWater,
    Euler,
    Burgers2d,
    Kpp,
}

impl Problem {
    pub const ALL: [Problem; 5] =
        [Problem::Burgers1d, Problem::ShallowWater, Problem::Euler, Problem::Burgers2d, Problem::Kpp];

    pub fn name(self) -> &'static str {
        match self {
            Problem::Burgers1d => "burgers1d",
            Problem::ShallowWater => "shallow_water",
            Problem::Euler => "euler",
            Problem::Burgers2d => "burgers2d",
            Problem::Kpp => "kpp",
        }
    }

    pub fn state_dim(self) -> usize {
        match self {
            Problem::ShallowWater => 2,
            Problem::Euler => 3,
            _ => 1,
        }
    }

    pub fn space_dim(self) -> usize {
        match self {
            Problem::Burgers2d | Problem::Kpp => 2,
            _ => 1,
        }
    }

    /// `[lo, hi]` per axis.
    pub fn domain(self) -> Vec<(f64, f64)> {
        match self {
            Problem::Burgers1d => vec![(0.0, 2.0 * std::f64::consts::PI)],
            Problem::ShallowWater | Problem::Euler => vec![(-5.0, 5.0)],
            Problem::Burgers2d => vec![(0.0, 1.0); 2],
            Problem::Kpp => vec![(-2.0, 2.0); 2],
        }
    }

    pub fn boundary(self) -> BoundaryKind {
        match self {
            Problem::Burgers1d | Problem::Burgers2d => BoundaryKind::Periodic,
            _ => BoundaryKind::Dirichlet,
        }
    }

    pub fn component_names(self) -> &'static [&'static str] {
        match self {
            Problem::ShallowWater => &["h", "hu"],
            Problem::Euler => &["rho", "rho_u", "energy"],
            _ => &["u"],
        }
    }

    /// Grid and horizon used for data generation at full scale.
    pub fn defaults(self) -> ProblemDefaults {
        let (dt, n, steps, window, t_final) = match self {
            Problem::Burgers1d => (0.005, vec![512], 20, 20, 3.0),
            Problem::ShallowWater => (0.005, vec![512], 20, 20, 1.5),
            Problem::Euler => (0.002, vec![512], 300, 20, 1.6),
            Problem::Burgers2d => (0.001, vec![100, 100], 20, 20, 1.6),
            Problem::Kpp => (0.001, vec![100, 100], 20, 20, 0.6),
        };
        ProblemDefaults { dt, n, steps, window, t_final }
    }

    /// Per-problem training settings at full scale.
    pub fn training_defaults(self) -> TrainingDefaults {
        let (epochs, n_traj, batch) = match self {
            Problem::Burgers1d => (200, 200, 5),
            Problem::ShallowWater => (200, 300, 10),
            Problem::Euler => (500, 150, 5),
            Problem::Burgers2d => (500, 10, 2),
            Problem::Kpp => (500, 50, 2),
        };
        let warmup = if self == Problem::Euler { 0.05 } else { 0.1 };
        TrainingDefaults { epochs, n_traj, batch, warmup }
    }

    pub fn spacing(self, n: &[usize]) -> Result<Vec<f64>, BenchmarkError> {
        let dom = self.domain();
        if n.len() != dom.len() {
            return Err(BenchmarkError::Config(format!(
                "{} needs {} grid sizes, got {}",
                self.name(),
                dom.len(),
                n.len()
            )));
        }
        Ok(dom.iter().zip(n).map(|(&(a, b), &k)| (b - a) / k as f64).collect())
    }

    /// Zero field on this problem's domain.
    pub fn grid(self, n: &[usize]) -> Result<GridField, BenchmarkError> {
        let h = self.spacing(n)?;
        Ok(GridField::zeros(self.state_dim(), n.to_vec(), h, vec![self.boundary(); n.len()])?)
    }

    /// Cell centre coordinates of cell `c` (x fastest).
    pub fn cell_center(self, field: &GridField, c: usize) -> Vec<f64> {
        let dom = self.domain();
        let idx = [c % field.nx(), c / field.nx()];
        (0..field.d()).map(|a| dom[a].0 + (idx[a] as f64 + 0.5) * field.h[a]).collect()
    }

    pub fn true_law(self, g: f64) -> TrueLaw {
        match self {
            Problem::Burgers1d => TrueLaw::Burgers { d: 1 },
            Problem::Burgers2d => TrueLaw::Burgers { d: 2 },
            Problem::ShallowWater => TrueLaw::ShallowWater { g },
            Problem::Euler => TrueLaw::Euler { gamma: EULER_GAMMA },
            Problem::Kpp => TrueLaw::Kpp,
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Problem {
    type Err = BenchmarkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Problem::ALL
            .into_iter()
            .find(|p| p.name() == key)
            .ok_or_else(|| BenchmarkError::Config(format!("unknown problem '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemDefaults {
    pub dt: f64,
    pub n: Vec<usize>,
    /// Simulated steps per trajectory (`L`).
    pub steps: usize,
    /// Steps per training window (`L_train`).
    pub window: usize,
    /// Horizon of the test rollout.
    pub t_final: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainingDefaults {
    pub epochs: usize,
    pub n_traj: usize,
    pub batch: usize,
    pub warmup: f64,
}

/// Ground-truth flux of a benchmark.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrueLaw {
    Burgers { d: usize },
    ShallowWater { g: f64 },
    Euler { gamma: f64 },
    Kpp,
}

impl TrueLaw {
    pub fn euler_pressure(gamma: f64, u: &[f64]) -> f64 {
        (gamma - 1.0) * (u[2] - 0.5 * u[1] * u[1] / u[0])
    }
}

impl KnownFlux for TrueLaw {
    fn state_dim(&self) -> usize {
        match self {
            TrueLaw::Burgers { .. } | TrueLaw::Kpp => 1,
            TrueLaw::ShallowWater { .. } => 2,
            TrueLaw::Euler { .. } => 3,
        }
    }

    fn flux(&self, axis: usize, u: &[f64], out: &mut [f64]) {
        match *self {
            TrueLaw::Burgers { .. } => out[0] = 0.5 * u[0] * u[0],
            TrueLaw::ShallowWater { g } => {
                let (h, m) = (u[0], u[1]);
                out[0] = m;
                out[1] = m * m / h + 0.5 * g * h * h;
            }
            TrueLaw::Euler { gamma } => {
                let (rho, m, e) = (u[0], u[1], u[2]);
                let vel = m / rho;
                let p = Self::euler_pressure(gamma, u);
                out[0] = m;
                out[1] = m * vel + p;
                out[2] = vel * (e + p);
            }
            TrueLaw::Kpp => out[0] = if axis == 0 { u[0].cos() } else { u[0].sin() },
        }
    }

    fn max_speed(&self, _axis: usize, u: &[f64]) -> f64 {
        match *self {
            TrueLaw::Burgers { .. } => u[0].abs(),
            TrueLaw::ShallowWater { g } => (u[1] / u[0]).abs() + (g * u[0]).sqrt(),
            TrueLaw::Euler { gamma } => {
                let p = Self::euler_pressure(gamma, u);
                (u[1] / u[0]).abs() + (gamma * p / u[0]).sqrt()
            }
            // |f'| along either axis never exceeds 1. The pointwise value
            // can vanish between two states, so use the global bound.
            TrueLaw::Kpp => 1.0,
        }
    }
}
