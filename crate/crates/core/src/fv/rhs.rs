//! Semi-discrete residual on plain values.

use super::grid::{fill_ghosts, BoundarySpec, GridField, PaddedField};
use super::weno::weno5_reconstruct;
use super::FvError;
use crate::autodiff::Tape;
use crate::flux::{entropy_stable_fluxes, Epoch, FluxError, FluxSettings, Stabilizers};
use crate::networks::LawModel;

/// Interface flux for batches of reconstructed states.
pub trait NumericalFlux {
    fn state_dim(&self) -> usize;

    /// `um`, `up` and the result are `p x n` component-major blocks.
    fn fluxes(&self, axis: usize, spacing: f64, um: &[f64], up: &[f64], n: usize) -> Result<Vec<f64>, FluxError>;
}

/// A conservation law with an explicit flux, used to generate reference data.
pub trait KnownFlux {
    fn state_dim(&self) -> usize;
    fn flux(&self, axis: usize, u: &[f64], out: &mut [f64]);
    /// Largest characteristic speed magnitude at `u` along `axis`.
    fn max_speed(&self, axis: usize, u: &[f64]) -> f64;
}

/// Local Lax-Friedrichs flux of a [`KnownFlux`].
pub struct Rusanov<'a, L: KnownFlux + ?Sized>(pub &'a L);

impl<L: KnownFlux + ?Sized> NumericalFlux for Rusanov<'_, L> {
    fn state_dim(&self) -> usize {
        self.0.state_dim()
    }

    fn fluxes(&self, axis: usize, _spacing: f64, um: &[f64], up: &[f64], n: usize) -> Result<Vec<f64>, FluxError> {
        let p = self.0.state_dim();
        let mut out = vec![0.0; p * n];
        let (mut a, mut b, mut fa, mut fb) = (vec![0.0; p], vec![0.0; p], vec![0.0; p], vec![0.0; p]);
        for i in 0..n {
            for k in 0..p {
                a[k] = um[k * n + i];
                b[k] = up[k * n + i];
            }
            self.0.flux(axis, &a, &mut fa);
            self.0.flux(axis, &b, &mut fb);
            let s = self.0.max_speed(axis, &a).max(self.0.max_speed(axis, &b));
            for k in 0..p {
                let f = 0.5 * (fa[k] + fb[k]) - 0.5 * s * (b[k] - a[k]);
                if !f.is_finite() {
                    return Err(FluxError::NonFinite { interface: i, what: "flux" });
                }
                out[k * n + i] = f;
            }
        }
        Ok(out)
    }
}

/// Entropy-stable flux of a learned (or analytic) law, evaluated without
/// recording gradients.
pub struct LearnedFlux<'a, M: LawModel> {
    pub model: &'a M,
    pub epoch: Epoch,
    pub dt: f64,
    pub stabilizers: Stabilizers,
}

impl<M: LawModel> NumericalFlux for LearnedFlux<'_, M> {
    fn state_dim(&self) -> usize {
        self.model.state_dim()
    }

    fn fluxes(&self, axis: usize, spacing: f64, um: &[f64], up: &[f64], n: usize) -> Result<Vec<f64>, FluxError> {
        let p = self.model.state_dim();
        let mut t = Tape::<f64>::new();
        let h = self.model.register(&mut t, false);
        let a = t.constant(um, p, n);
        let b = t.constant(up, p, n);
        let settings = FluxSettings { epoch: self.epoch, dx: spacing, dt: self.dt, stabilizers: self.stabilizers };
        let out = entropy_stable_fluxes(&mut t, self.model, &h, axis, a, b, &settings, None)?;
        Ok(t.primal(out.flux))
    }
}

/// Reconstructs `u-`, `u+` at all `n + 1` interfaces of every line along
/// `axis`. Interface `i` sits between positions `i - 1` and `i`.
pub fn reconstruct_interfaces(field: &GridField, padded: &PaddedField, axis: usize) -> (Vec<f64>, Vec<f64>) {
    let p = field.p;
    let n = field.n[axis];
    let lines = field.lines(axis);
    let total = lines * (n + 1);
    let mut um = vec![0.0; p * total];
    let mut up = vec![0.0; p * total];
    let h = field.h[axis];
    let at = |line: usize, pos: isize, k: usize| -> f64 {
        let s = if axis == 0 { padded.get(pos, line as isize) } else { padded.get(line as isize, pos) };
        s[k]
    };
    for line in 0..lines {
        for i in 0..=n {
            let col = line * (n + 1) + i;
            let i = i as isize;
            for k in 0..p {
                let s: [f64; 5] = std::array::from_fn(|o| at(line, i - 3 + o as isize, k));
                um[k * total + col] = weno5_reconstruct(s, h);
                let r: [f64; 5] = std::array::from_fn(|o| at(line, i + 2 - o as isize, k));
                up[k * total + col] = weno5_reconstruct(r, h);
            }
        }
    }
    (um, up)
}

/// `du/dt = -sum_axes (F_{i+1/2} - F_{i-1/2}) / h`.
pub fn semidiscrete_rhs<F: NumericalFlux + ?Sized>(
    field: &GridField,
    spec: &BoundarySpec,
    flux: &F,
) -> Result<GridField, FvError> {
    let p = field.p;
    if flux.state_dim() != p {
        return Err(FvError::Shape(format!("flux has {} components, field {}", flux.state_dim(), p)));
    }
    let padded = fill_ghosts(field, spec)?;
    let mut rate: Option<Vec<f64>> = None;
    for axis in 0..field.d() {
        let n = field.n[axis];
        let total = field.lines(axis) * (n + 1);
        let (um, up) = reconstruct_interfaces(field, &padded, axis);
        let f = flux.fluxes(axis, field.h[axis], &um, &up, total).map_err(|e| FvError::flux(axis, n + 1, e))?;
        let scale = -1.0 / field.h[axis];
        let mut r = vec![0.0; field.values.len()];
        for line in 0..field.lines(axis) {
            for pos in 0..n {
                let c = field.cell_on_line(axis, line, pos);
                let left = line * (n + 1) + pos;
                for k in 0..p {
                    r[c * p + k] = (f[k * total + left + 1] - f[k * total + left]) * scale;
                }
            }
        }
        rate = Some(match rate {
            None => r,
            Some(prev) => prev.iter().zip(&r).map(|(a, b)| a + b).collect(),
        });
    }
    Ok(field.with_values(rate.expect("at least one axis")))
}
