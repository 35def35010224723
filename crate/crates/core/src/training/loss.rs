use super::TrainError;
use crate::autodiff::{sign, Tape};
use crate::benchmarks::TrajectoryDataset;
use crate::fv::{learned_rk3_step, transpose, BoundarySpec, GridField, StencilPlan, StepSettings, WaveSpeedLog};
use crate::networks::{LawModel, LearnedLaw};

/// One observed window: the grid (holding frame 0, whose boundary cells
/// freeze the Dirichlet ghosts) and every frame in component-major order.
#[derive(Clone, Debug)]
pub struct Window {
    pub grid: GridField,
    pub frames: Vec<Vec<f64>>,
}

impl Window {
    /// Frames given as cell-major fields on a common grid.
    pub fn new(frames: &[GridField]) -> Self {
        let grid = frames[0].clone();
        let frames = frames.iter().map(|f| f.component_major()).collect();
        Window { grid, frames }
    }

    pub fn from_dataset(data: &TrajectoryDataset, k: usize) -> Result<Self, TrainError> {
        let fields = (0..=data.manifest.window).map(|l| data.field(k, l)).collect::<Result<Vec<_>, _>>()?;
        Ok(Window::new(&fields))
    }

    pub fn steps(&self) -> usize {
        self.frames.len() - 1
    }

    fn plan(&self) -> Result<StencilPlan, TrainError> {
        Ok(StencilPlan::new(&self.grid, &BoundarySpec::frozen_from(&self.grid))?)
    }
}

/// One learned TVDRK3 step of a component-major state, without gradients.
pub fn step_values<M: LawModel>(
    model: &M,
    plan: &StencilPlan,
    z: &[f64],
    settings: &StepSettings,
    log: Option<&mut WaveSpeedLog>,
) -> Result<Vec<f64>, crate::fv::FvError> {
    let mut t = Tape::<f64>::new();
    let h = model.register(&mut t, false);
    let z0 = t.constant(z, plan.p, plan.n_cells);
    let z1 = learned_rk3_step(&mut t, model, &h, plan, z0, settings, log)?;
    Ok(t.value(z1).to_vec())
}

/// Rolls the learned scheme forward from `u0`; Dirichlet ghosts are frozen
/// from `u0`. Returns `steps + 1` fields.
pub fn rollout<M: LawModel>(
    model: &M,
    u0: &GridField,
    steps: usize,
    settings: &StepSettings,
) -> Result<Vec<GridField>, TrainError> {
    let plan = StencilPlan::new(u0, &BoundarySpec::frozen_from(u0))?;
    let (p, cells) = (u0.p, u0.n_cells());
    let mut z = u0.component_major();
    let mut out = vec![u0.clone()];
    for step in 0..steps {
        z = step_values(model, &plan, &z, settings, None).map_err(|source| TrainError::Rollout { step, source })?;
        out.push(u0.with_values(transpose(&z, p, cells)));
    }
    Ok(out)
}

fn l1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

fn l1_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Numerator and denominator of the normalized L1 loss of one window, plus
/// the predicted states.
#[derive(Clone, Debug)]
pub struct WindowTerms {
    pub mismatch: f64,
    pub magnitude: f64,
    pub states: Vec<Vec<f64>>,
}

/// Predicts every frame of `w` from its first one. A recording log stores
/// the wave speeds; a replaying log reuses them.
pub fn window_terms<M: LawModel>(
    model: &M,
    w: &Window,
    settings: &StepSettings,
    mut log: Option<&mut WaveSpeedLog>,
) -> Result<WindowTerms, TrainError> {
    let plan = w.plan()?;
    let mut states = vec![w.frames[0].clone()];
    let mut mismatch = 0.0;
    for l in 1..=w.steps() {
        let z = step_values(model, &plan, &states[l - 1], settings, log.as_deref_mut())
            .map_err(|source| TrainError::Rollout { step: l - 1, source })?;
        mismatch += l1_diff(&z, &w.frames[l]);
        states.push(z);
    }
    let magnitude = w.frames.iter().map(|f| l1(f)).sum();
    Ok(WindowTerms { mismatch, magnitude, states })
}

/// `sum_k sum_l |u_hat - u|_1 / sum_k sum_l |u|_1` over a batch of windows.
pub fn recurrent_loss<M: LawModel>(model: &M, batch: &[&Window], settings: &StepSettings) -> Result<f64, TrainError> {
    if batch.is_empty() {
        return Err(TrainError::Config("empty batch".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (k, w) in batch.iter().enumerate() {
        let t = window_terms(model, w, settings, None).map_err(|e| e.in_window(k))?;
        num += t.mismatch;
        den += t.magnitude;
    }
    if den == 0.0 {
        return Err(TrainError::ZeroDenominator);
    }
    Ok(num / den)
}

/// Loss and its gradient in checkpoint parameter order. The gradient is
/// computed one step at a time: each step's tape is rebuilt from the stored
/// state and pulled back against the running state adjoint.
pub fn loss_and_gradient(
    model: &LearnedLaw,
    batch: &[&Window],
    settings: &StepSettings,
) -> Result<(f64, Vec<f64>), TrainError> {
    if batch.is_empty() {
        return Err(TrainError::Config("empty batch".into()));
    }
    let mut grad = vec![0.0; model.n_params()];
    let (mut num, mut den) = (0.0, 0.0);
    for (k, w) in batch.iter().enumerate() {
        let terms = window_terms(model, w, settings, None).map_err(|e| e.in_window(k))?;
        num += terms.mismatch;
        den += terms.magnitude;
        let plan = w.plan()?;
        let (p, cells) = (plan.p, plan.n_cells);
        let mut adj = vec![0.0; p * cells];
        for l in (1..=w.steps()).rev() {
            for ((a, z), u) in adj.iter_mut().zip(&terms.states[l]).zip(&w.frames[l]) {
                *a += sign(z - u);
            }
            let mut t = Tape::<f64>::new();
            let h = model.register(&mut t, true);
            let z0 = t.leaf_f64(&terms.states[l - 1], p, cells, l > 1);
            let z1 = learned_rk3_step(&mut t, model, &h, &plan, z0, settings, None)
                .map_err(|source| TrainError::Rollout { step: l - 1, source }.in_window(k))?;
            t.backward(z1, &adj).map_err(|e| TrainError::Config(e.to_string()))?;
            LearnedLaw::accumulate_gradient(&t, &h, &mut grad);
            if l > 1 {
                adj.copy_from_slice(t.adjoint(z0));
            }
        }
    }
    if den == 0.0 {
        return Err(TrainError::ZeroDenominator);
    }
    grad.iter_mut().for_each(|g| *g /= den);
    Ok((num / den, grad))
}
