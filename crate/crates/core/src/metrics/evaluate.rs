use std::path::Path;

use super::remainders::{conservation_remainder, entropy_remainder, relative_l1_error};
use super::report::{EvalReport, Profile};
use super::MetricsError;
use crate::benchmarks::{reference_solve, IcParams, Problem};
use crate::flux::{Epoch, Stabilizers};
use crate::fv::{GridField, StepSettings};
use crate::networks::LawModel;
use crate::training::rollout;

/// Grid and step for an evaluation run.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalSetup {
    pub problem: Problem,
    pub n: Vec<usize>,
    pub dt: f64,
    pub g: f64,
    pub xi: f64,
    pub stabilizers: Stabilizers,
    pub t_final: f64,
    /// Snapshot times; each is rounded to the nearest step.
    pub profile_times: Vec<f64>,
}

impl EvalSetup {
    /// Defaults of `problem`, profiles at a third, two thirds and all of `t_final`.
    pub fn for_problem(problem: Problem, t_final: Option<f64>) -> Self {
        let d = problem.defaults();
        let t_final = t_final.unwrap_or(d.t_final);
        EvalSetup {
            problem,
            n: d.n,
            dt: d.dt,
            g: crate::benchmarks::DEFAULT_GRAVITY,
            xi: 0.0,
            stabilizers: Stabilizers::default(),
            t_final,
            profile_times: vec![t_final / 3.0, 2.0 * t_final / 3.0, t_final],
        }
    }

    pub fn steps(&self) -> usize {
        steps_for(self.t_final, self.dt)
    }
}

fn steps_for(t: f64, dt: f64) -> usize {
    (t / dt).round() as usize
}

/// Learned rollout and reference for the test initial condition, plus metrics.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub report: EvalReport,
    pub learned: Vec<GridField>,
    pub reference: Vec<GridField>,
}

impl Evaluation {
    /// Learned-solution snapshots at the setup's profile times.
    pub fn profiles(&self, setup: &EvalSetup) -> Vec<Profile> {
        self.snapshots(setup, &self.learned)
    }

    pub fn reference_profiles(&self, setup: &EvalSetup) -> Vec<Profile> {
        self.snapshots(setup, &self.reference)
    }

    fn snapshots(&self, setup: &EvalSetup, traj: &[GridField]) -> Vec<Profile> {
        setup
            .profile_times
            .iter()
            .filter_map(|&t| {
                let field = traj.get(steps_for(t, setup.dt))?.clone();
                let centres = (0..field.n_cells()).map(|c| setup.problem.cell_center(&field, c)).collect();
                Some(Profile { t, field, centres })
            })
            .collect()
    }
}

/// Runs `model` from the fixed test initial condition to `t_final` and
/// compares with the reference solver.
pub fn evaluate_model<M: LawModel>(
    model: &M,
    setup: &EvalSetup,
    checkpoint: &Path,
) -> Result<Evaluation, MetricsError> {
    if !(setup.dt > 0.0 && setup.t_final >= 0.0) {
        return Err(MetricsError::Report(format!(
            "need dt > 0 and t_final >= 0, got {} and {}",
            setup.dt, setup.t_final
        )));
    }
    let steps = setup.steps();
    let ic = IcParams::test(setup.problem).cell_averages(&setup.n)?;
    let law = setup.problem.true_law(setup.g);
    let reference = reference_solve(&law, &ic, setup.dt, steps)?;
    let settings = StepSettings { epoch: Epoch::Evaluation, dt: setup.dt, stabilizers: setup.stabilizers };
    let learned = rollout(model, &ic, steps, &settings)?;
    let conservation = conservation_remainder(model, &learned, setup.dt)?;
    let entropy = entropy_remainder(model, &learned, setup.dt)?;
    let error = relative_l1_error(&learned, &reference)?;
    let report = EvalReport {
        problem: setup.problem,
        xi: setup.xi,
        checkpoint: checkpoint.display().to_string(),
        times: (0..=steps).map(|l| l as f64 * setup.dt).collect(),
        conservation,
        entropy: entropy.literal,
        entropy_boundary: entropy.boundary,
        error,
    };
    Ok(Evaluation { report, learned, reference })
}
