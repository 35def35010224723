use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::problems::{Problem, EULER_GAMMA};
use super::BenchmarkError;
use crate::fv::GridField;

const SW_NOMINAL: (f64, f64) = (3.5, 1.0);
const EULER_SPREAD: f64 = 0.1;
/// Nominal `(rho_l, p_l, u_l, eps, p_r, x0)` of the Shu-Osher setup.
const EULER_NOMINAL: [f64; 6] = [3.857135, 10.32333, 2.62936, 0.2, 1.0, -4.0];
const EULER_X1: f64 = 3.29867;

/// Parameters of one initial condition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum IcParams {
    Burgers1d { alpha: f64, beta: f64 },
    ShallowWater { h_l: f64, h_r: f64, u_l: f64, u_r: f64, x0: f64 },
    Euler { rho_l: f64, p_l: f64, u_l: f64, eps: f64, p_r: f64, x0: f64 },
    Burgers2d { x0: f64, y0: f64, alpha: f64, beta: f64 },
    Kpp { x0: f64, y0: f64, omega_a: f64, omega_b: f64, omega_c: f64 },
}

fn spread(nominal: f64) -> (f64, f64) {
    let a = nominal * (1.0 - EULER_SPREAD);
    let b = nominal * (1.0 + EULER_SPREAD);
    (a.min(b), a.max(b))
}

impl IcParams {
    pub fn problem(&self) -> Problem {
        match self {
            IcParams::Burgers1d { .. } => Problem::Burgers1d,
            IcParams::ShallowWater { .. } => Problem::ShallowWater,
            IcParams::Euler { .. } => Problem::Euler,
            IcParams::Burgers2d { .. } => Problem::Burgers2d,
            IcParams::Kpp { .. } => Problem::Kpp,
        }
    }

    /// Fixed parameters of the test case.
    pub fn test(problem: Problem) -> Self {
        match problem {
            Problem::Burgers1d => IcParams::Burgers1d { alpha: 1.05609, beta: 0.1997 },
            Problem::ShallowWater => {
                IcParams::ShallowWater { h_l: 3.5691196, h_r: 1.178673, u_l: -0.064667, u_r: -0.045197, x0: 0.003832 }
            }
            Problem::Euler => {
                let [rho_l, p_l, u_l, eps, p_r, x0] = EULER_NOMINAL;
                IcParams::Euler { rho_l, p_l, u_l, eps, p_r, x0 }
            }
            Problem::Burgers2d => IcParams::Burgers2d { x0: 1.032833, y0: 0.034137, alpha: 1.004777, beta: 0.106782 },
            Problem::Kpp => IcParams::Kpp { x0: 0.0, y0: 0.0, omega_a: 0.0, omega_b: 0.0, omega_c: 0.0 },
        }
    }

    /// Sampling box per parameter, in declaration order.
    pub fn ranges(problem: Problem) -> Vec<(f64, f64)> {
        match problem {
            Problem::Burgers1d => vec![(0.75, 1.25), (-0.25, 0.25)],
            Problem::ShallowWater => {
                let (hl, hr) = SW_NOMINAL;
                vec![(hl - 0.2, hl + 0.2), (hr - 0.2, hr + 0.2), (-0.1, 0.1), (-0.1, 0.1), (-0.1, 0.1)]
            }
            Problem::Euler => EULER_NOMINAL.iter().map(|&v| spread(v)).collect(),
            Problem::Burgers2d => vec![(0.5, 1.5), (-0.5, 0.5), (0.75, 1.25), (-0.25, 0.25)],
            Problem::Kpp => vec![(-0.25, 0.25); 5],
        }
    }

    pub fn sample<R: Rng + ?Sized>(problem: Problem, rng: &mut R) -> Self {
        let v: Vec<f64> = Self::ranges(problem).into_iter().map(|(a, b)| rng.random_range(a..b)).collect();
        Self::from_values(problem, &v)
    }

    fn from_values(problem: Problem, v: &[f64]) -> Self {
        match problem {
            Problem::Burgers1d => IcParams::Burgers1d { alpha: v[0], beta: v[1] },
            Problem::ShallowWater => IcParams::ShallowWater { h_l: v[0], h_r: v[1], u_l: v[2], u_r: v[3], x0: v[4] },
            Problem::Euler => IcParams::Euler { rho_l: v[0], p_l: v[1], u_l: v[2], eps: v[3], p_r: v[4], x0: v[5] },
            Problem::Burgers2d => IcParams::Burgers2d { x0: v[0], y0: v[1], alpha: v[2], beta: v[3] },
            Problem::Kpp => IcParams::Kpp { x0: v[0], y0: v[1], omega_a: v[2], omega_b: v[3], omega_c: v[4] },
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match *self {
            IcParams::Burgers1d { alpha, beta } => vec![alpha, beta],
            IcParams::ShallowWater { h_l, h_r, u_l, u_r, x0 } => vec![h_l, h_r, u_l, u_r, x0],
            IcParams::Euler { rho_l, p_l, u_l, eps, p_r, x0 } => vec![rho_l, p_l, u_l, eps, p_r, x0],
            IcParams::Burgers2d { x0, y0, alpha, beta } => vec![x0, y0, alpha, beta],
            IcParams::Kpp { x0, y0, omega_a, omega_b, omega_c } => vec![x0, y0, omega_a, omega_b, omega_c],
        }
    }

    /// Pointwise initial state at `x`.
    pub fn evaluate(&self, x: &[f64], out: &mut [f64]) {
        match *self {
            IcParams::Burgers1d { alpha, beta } => out[0] = alpha * x[0].sin() + beta,
            IcParams::ShallowWater { h_l, h_r, u_l, u_r, x0 } => {
                let (h, u) = if x[0] < x0 { (h_l, u_l) } else { (h_r, u_r) };
                out[0] = h;
                out[1] = h * u;
            }
            IcParams::Euler { rho_l, p_l, u_l, eps, p_r, x0 } => {
                let x = x[0];
                let (rho, u, p) = if x <= x0 {
                    (rho_l, u_l, p_l)
                } else if x <= EULER_X1 {
                    (1.0 + eps * (5.0 * x).sin(), 0.0, p_r)
                } else {
                    (1.0 + eps * (5.0 * x).sin() * (-(x - EULER_X1).powi(4)).exp(), 0.0, p_r)
                };
                out[0] = rho;
                out[1] = rho * u;
                out[2] = p / (EULER_GAMMA - 1.0) + 0.5 * rho * u * u;
            }
            IcParams::Burgers2d { x0, y0, alpha, beta } => {
                out[0] = alpha * (2.0 * PI * x[0] + x0).sin() * (2.0 * PI * x[1] + y0).cos() + beta
            }
            IcParams::Kpp { x0, y0, omega_a, omega_b, omega_c } => {
                let (x, y) = (x[0], x[1]);
                let c = 0.7 + omega_c;
                let a = 3.25 * PI + 2.0 * PI * omega_a;
                let b = a
                    + 1.0
                    + (2.0 * PI * x).cos() * (2.0 * PI * y).sin()
                    + PI * (1.0 + (4.0 * PI * x).cos() * (6.0 * PI * y).sin()) * omega_b;
                let r2 = (x - x0).powi(2) + (y - y0).powi(2);
                out[0] = if r2 > c * c { b * (-r2 / (c * c)).exp() } else { b };
            }
        }
    }

    /// Cell averages by tensor Gauss-Legendre quadrature with four nodes per
    /// axis.
    pub fn cell_averages(&self, n: &[usize]) -> Result<GridField, BenchmarkError> {
        const NODES: [f64; 4] = [-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526];
        const WEIGHTS: [f64; 4] = [0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538];
        let problem = self.problem();
        let mut field = problem.grid(n)?;
        let p = field.p;
        let d = field.d();
        let mut s = vec![0.0; p];
        let mut acc = vec![0.0; p];
        let mut x = vec![0.0; d];
        let ny_nodes = if d == 2 { 4 } else { 1 };
        for c in 0..field.n_cells() {
            let centre = problem.cell_center(&field, c);
            acc.iter_mut().for_each(|a| *a = 0.0);
            for j in 0..ny_nodes {
                for i in 0..4 {
                    x[0] = centre[0] + 0.5 * field.h[0] * NODES[i];
                    let mut w = 0.5 * WEIGHTS[i];
                    if d == 2 {
                        x[1] = centre[1] + 0.5 * field.h[1] * NODES[j];
                        w *= 0.5 * WEIGHTS[j];
                    }
                    self.evaluate(&x, &mut s);
                    for k in 0..p {
                        acc[k] += w * s[k];
                    }
                }
            }
            field.values[c * p..(c + 1) * p].copy_from_slice(&acc);
        }
        Ok(field)
    }
}

/// Draws initial-condition parameters and returns the averaged field.
pub fn sample_initial_condition<R: Rng + ?Sized>(
    problem: Problem,
    n: &[usize],
    rng: &mut R,
) -> Result<(IcParams, GridField), BenchmarkError> {
    let params = IcParams::sample(problem, rng);
    let field = params.cell_averages(n)?;
    Ok((params, field))
}
