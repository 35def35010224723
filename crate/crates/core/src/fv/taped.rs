//! Semi-discrete residual and TVDRK3 steps of a learned law, recorded on a
//! tape so a whole step can be differentiated in the state and parameters.

use super::grid::{BoundarySpec, GridField, Source};
use super::weno::weno5_tape;
use super::FvError;
use crate::autodiff::{Tape, Var};
use crate::flux::{entropy_stable_fluxes, Epoch, FluxSettings, Stabilizers};
use crate::networks::LawModel;

/// Precomputed gather indices for every axis of a grid.
///
/// Cell states live in columns `0..cells` of a source block; Dirichlet
/// frozen states are appended as extra columns (one per line and side).
#[derive(Clone, Debug)]
pub struct StencilPlan {
    pub p: usize,
    pub n: Vec<usize>,
    pub h: Vec<f64>,
    pub n_cells: usize,
    ghost_values: Vec<f64>,
    n_ghost: usize,
    axes: Vec<AxisPlan>,
}

#[derive(Clone, Debug)]
struct AxisPlan {
    /// `stencil[o]` lists the source column at offset `o - 3` from each
    /// interface.
    stencil: [Vec<usize>; 6],
    left: Vec<usize>,
    right: Vec<usize>,
    per_line: usize,
}

impl StencilPlan {
    pub fn new(field: &GridField, spec: &BoundarySpec) -> Result<Self, FvError> {
        spec.validate(field)?;
        let p = field.p;
        let n_cells = field.n_cells();
        let mut ghost_cols: Vec<Vec<f64>> = Vec::new();
        let mut ghost_base = Vec::with_capacity(field.d());
        for axis in 0..field.d() {
            ghost_base.push(n_cells + ghost_cols.len());
            if let super::grid::AxisBoundary::Dirichlet { .. } = spec.axes[axis] {
                for line in 0..field.lines(axis) {
                    ghost_cols.push(spec.frozen(axis, line, false, p).to_vec());
                    ghost_cols.push(spec.frozen(axis, line, true, p).to_vec());
                }
            }
        }
        let n_ghost = ghost_cols.len();
        let mut ghost_values = vec![0.0; p * n_ghost];
        for (j, col) in ghost_cols.iter().enumerate() {
            for k in 0..p {
                ghost_values[k * n_ghost + j] = col[k];
            }
        }
        let mut axes = Vec::with_capacity(field.d());
        for axis in 0..field.d() {
            let n = field.n[axis];
            let lines = field.lines(axis);
            let per_line = n + 1;
            let mut stencil: [Vec<usize>; 6] = Default::default();
            for line in 0..lines {
                for i in 0..per_line {
                    for (o, st) in stencil.iter_mut().enumerate() {
                        let pos = i as isize + o as isize - 3;
                        let col = match spec.source(axis, n, pos) {
                            Source::Cell(c) => field.cell_on_line(axis, line, c),
                            Source::Low => ghost_base[axis] + 2 * line,
                            Source::High => ghost_base[axis] + 2 * line + 1,
                        };
                        st.push(col);
                    }
                }
            }
            let mut left = vec![0; n_cells];
            let mut right = vec![0; n_cells];
            for line in 0..lines {
                for pos in 0..n {
                    let c = field.cell_on_line(axis, line, pos);
                    left[c] = line * per_line + pos;
                    right[c] = line * per_line + pos + 1;
                }
            }
            axes.push(AxisPlan { stencil, left, right, per_line });
        }
        Ok(StencilPlan { p, n: field.n.clone(), h: field.h.clone(), n_cells, ghost_values, n_ghost, axes })
    }

    /// Source block `[state | frozen ghosts]` for a `p x cells` state node.
    pub fn source(&self, t: &mut Tape<f64>, state: Var) -> Var {
        if self.n_ghost == 0 {
            state
        } else {
            let g = t.constant(&self.ghost_values, self.p, self.n_ghost);
            t.concat_cols(state, g)
        }
    }
}

/// Wave speeds observed during a computation, in call order. Replaying a
/// log feeds the same constants back in, which holds them fixed across
/// finite-difference perturbations.
#[derive(Clone, Debug, Default)]
pub struct WaveSpeedLog {
    entries: Vec<Vec<f64>>,
    cursor: usize,
    replay: bool,
}

impl WaveSpeedLog {
    pub fn recording() -> Self {
        Self::default()
    }

    pub fn replaying(entries: Vec<Vec<f64>>) -> Self {
        WaveSpeedLog { entries, cursor: 0, replay: true }
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Vec<f64>> {
        self.entries
    }
}

/// Time-stepping constants shared by every stage.
#[derive(Clone, Copy, Debug)]
pub struct StepSettings {
    pub epoch: Epoch,
    pub dt: f64,
    pub stabilizers: Stabilizers,
}

/// Rate `du/dt` as a `p x cells` node.
pub fn learned_rate<M: LawModel>(
    t: &mut Tape<f64>,
    model: &M,
    handles: &M::Handles,
    plan: &StencilPlan,
    state: Var,
    settings: &StepSettings,
    mut log: Option<&mut WaveSpeedLog>,
) -> Result<Var, FvError> {
    let src = plan.source(t, state);
    let mut rate: Option<Var> = None;
    for (axis, ap) in plan.axes.iter().enumerate() {
        let h = plan.h[axis];
        let cols: Vec<Var> = ap.stencil.iter().map(|idx| t.gather(src, idx)).collect();
        let um = weno5_tape(t, [cols[0], cols[1], cols[2], cols[3], cols[4]], h);
        let up = weno5_tape(t, [cols[5], cols[4], cols[3], cols[2], cols[1]], h);
        let fs = FluxSettings { epoch: settings.epoch, dx: h, dt: settings.dt, stabilizers: settings.stabilizers };
        let frozen = match log.as_deref_mut() {
            Some(l) if l.replay => {
                let e = l.entries.get(l.cursor).cloned();
                l.cursor += 1;
                Some(e.ok_or_else(|| FvError::Shape("wave-speed log exhausted".into()))?)
            }
            _ => None,
        };
        let out = entropy_stable_fluxes(t, model, handles, axis, um, up, &fs, frozen.as_deref())
            .map_err(|e| FvError::flux(axis, ap.per_line, e))?;
        if let Some(l) = log.as_deref_mut() {
            if !l.replay {
                l.entries.push(out.wave_speeds);
            }
        }
        let fr = t.gather(out.flux, &ap.right);
        let fl = t.gather(out.flux, &ap.left);
        let d = t.sub(fr, fl);
        let r = t.scale(d, -1.0 / h);
        rate = Some(match rate {
            None => r,
            Some(prev) => t.add(prev, r),
        });
    }
    Ok(rate.expect("at least one axis"))
}

fn check_stage(t: &Tape<f64>, z: Var, stage: usize) -> Result<(), FvError> {
    if t.value(z).iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(FvError::NonFinite { stage })
    }
}

/// One TVDRK3 step of the learned scheme; returns the new state node.
pub fn learned_rk3_step<M: LawModel>(
    t: &mut Tape<f64>,
    model: &M,
    handles: &M::Handles,
    plan: &StencilPlan,
    z0: Var,
    settings: &StepSettings,
    mut log: Option<&mut WaveSpeedLog>,
) -> Result<Var, FvError> {
    let dt = settings.dt;
    let r0 = learned_rate(t, model, handles, plan, z0, settings, log.as_deref_mut())?;
    let d0 = t.scale(r0, dt);
    let z1 = t.add(z0, d0);
    check_stage(t, z1, 1)?;

    let r1 = learned_rate(t, model, handles, plan, z1, settings, log.as_deref_mut())?;
    let a = t.scale(z0, 0.75);
    let b = t.scale(z1, 0.25);
    let ab = t.add(a, b);
    let d1 = t.scale(r1, 0.25 * dt);
    let z2 = t.add(ab, d1);
    check_stage(t, z2, 2)?;

    let r2 = learned_rate(t, model, handles, plan, z2, settings, log.as_deref_mut())?;
    let a = t.scale(z0, 1.0 / 3.0);
    let b = t.scale(z2, 2.0 / 3.0);
    let ab = t.add(a, b);
    let d2 = t.scale(r2, (2.0 / 3.0) * dt);
    let z3 = t.add(ab, d2);
    check_stage(t, z3, 3)?;
    Ok(z3)
}
