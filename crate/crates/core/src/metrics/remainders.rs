use super::MetricsError;
use crate::fv::{BoundaryKind, GridField};
use crate::networks::eval::{evaluate_states, StateEvaluation};
use crate::networks::LawModel;

fn check_trajectory(traj: &[GridField]) -> Result<&GridField, MetricsError> {
    let first = traj.first().ok_or(MetricsError::Empty)?;
    if traj.iter().any(|f| f.n != first.n || f.p != first.p) {
        return Err(MetricsError::GridMismatch);
    }
    Ok(first)
}

/// Boundary cells of `axis`: `(line, low cell, high cell)`.
fn boundary_cells(f: &GridField, axis: usize) -> Vec<(usize, usize, usize)> {
    let n = f.n[axis];
    (0..f.lines(axis)).map(|line| (line, f.cell_on_line(axis, line, 0), f.cell_on_line(axis, line, n - 1))).collect()
}

/// Face area of a cell normal to `axis` (1 in 1-D).
fn face(f: &GridField, axis: usize) -> f64 {
    f.cell_volume() / f.h[axis]
}

fn evaluate<M: LawModel>(model: &M, f: &GridField) -> StateEvaluation {
    evaluate_states(model, &f.component_major(), f.n_cells())
}

/// Per component, `|sum_j (u_j(t_l) - u_j(t_0)) dV - sum_{s<=l} dt (F_in - F_out)|`
/// at every stored time. Boundary fluxes use the learned physical flux at the
/// boundary cells of step `s` (right-endpoint rule); periodic axes contribute
/// nothing.
pub fn conservation_remainder<M: LawModel>(
    model: &M,
    traj: &[GridField],
    dt: f64,
) -> Result<Vec<Vec<f64>>, MetricsError> {
    let first = check_trajectory(traj)?;
    let p = first.p;
    let t0 = first.totals();
    let mut inflow = vec![0.0; p];
    let mut out = vec![Vec::with_capacity(traj.len()); p];
    for (l, f) in traj.iter().enumerate() {
        if l > 0 {
            let dirichlet: Vec<usize> = (0..f.d()).filter(|&a| f.boundary[a] == BoundaryKind::Dirichlet).collect();
            if !dirichlet.is_empty() {
                let ev = evaluate(model, f);
                let n = ev.n;
                for axis in dirichlet {
                    let area = face(f, axis);
                    for (_, lo, hi) in boundary_cells(f, axis) {
                        for k in 0..p {
                            let fl = ev.flux[axis][k * n + lo];
                            let fr = ev.flux[axis][k * n + hi];
                            inflow[k] += dt * area * (fl - fr);
                        }
                    }
                }
            }
        }
        let tl = f.totals();
        for k in 0..p {
            out[k].push(((tl[k] - t0[k]) - inflow[k]).abs());
        }
    }
    Ok(out)
}

/// Both entropy remainders at every stored time.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyRemainder {
    /// `sum_j dV (eta_j(t_l) - eta_j(t_0)) - sum_{s<=l} dt sum_j sum_i v_j^T f_i(u_j)`,
    /// transcribed with the flux term summed over all cells.
    pub literal: Vec<f64>,
    /// Total entropy change plus the net outflow of `G_i = v^T f_i - phi_i`
    /// through Dirichlet boundaries; nonpositive for an entropy-stable run.
    pub boundary: Vec<f64>,
}

pub fn entropy_remainder<M: LawModel>(
    model: &M,
    traj: &[GridField],
    dt: f64,
) -> Result<EntropyRemainder, MetricsError> {
    let first = check_trajectory(traj)?;
    let p = first.p;
    let vol = first.cell_volume();
    let mut eta0 = 0.0;
    let mut literal_flux = 0.0;
    let mut outflow = 0.0;
    let mut literal = Vec::with_capacity(traj.len());
    let mut boundary = Vec::with_capacity(traj.len());
    for (l, f) in traj.iter().enumerate() {
        let ev = evaluate(model, f);
        let n = ev.n;
        let total: f64 = ev.eta.iter().sum::<f64>() * vol;
        if l == 0 {
            eta0 = total;
        } else {
            for axis in 0..f.d() {
                let flux = &ev.flux[axis];
                let vf = |j: usize| (0..p).map(|k| ev.v[k * n + j] * flux[k * n + j]).sum::<f64>();
                literal_flux += dt * (0..n).map(vf).sum::<f64>();
                if f.boundary[axis] == BoundaryKind::Dirichlet {
                    let g = |j: usize| vf(j) - ev.potential[axis][j];
                    let area = face(f, axis);
                    for (_, lo, hi) in boundary_cells(f, axis) {
                        outflow += dt * area * (g(hi) - g(lo));
                    }
                }
            }
        }
        literal.push((total - eta0) - literal_flux);
        boundary.push((total - eta0) + outflow);
    }
    Ok(EntropyRemainder { literal, boundary })
}

/// `|pred - ref|_1 / |ref|_1` per stored time.
pub fn relative_l1_error(pred: &[GridField], reference: &[GridField]) -> Result<Vec<f64>, MetricsError> {
    if pred.len() != reference.len() {
        return Err(MetricsError::GridMismatch);
    }
    pred.iter()
        .zip(reference)
        .map(|(a, b)| {
            if a.n != b.n || a.p != b.p {
                return Err(MetricsError::GridMismatch);
            }
            let num: f64 = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).sum();
            let den: f64 = b.values.iter().map(|y| y.abs()).sum();
            Ok(num / den)
        })
        .collect()
}
