//! Single-interface flux evaluation on plain values.

use super::{wave_speed, Epoch, FluxError, Stabilizers, DEGENERATE_JUMP};
use crate::linalg::{dot, SymMatrix};
use crate::networks::eval::{entropy_hessian, evaluate_states, potential_hessian};
use crate::networks::LawModel;

/// Left/right states at one interface with their entropy variables and the
/// clipped wave speed.
#[derive(Clone, Debug)]
pub struct FluxContext {
    pub u_minus: Vec<f64>,
    pub u_plus: Vec<f64>,
    pub v_minus: Vec<f64>,
    pub v_plus: Vec<f64>,
    /// Wave speed after clipping at `cfl * dx / dt`.
    pub lambda_max: f64,
    pub epoch: Epoch,
    pub dx: f64,
    pub dt: f64,
    pub stabilizers: Stabilizers,
}

fn mean(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
}

fn jump(minus: &[f64], plus: &[f64]) -> Vec<f64> {
    plus.iter().zip(minus).map(|(p, m)| p - m).collect()
}

impl FluxContext {
    /// Evaluates entropy variables and the wave speed from `model`.
    pub fn from_model<M: LawModel>(
        model: &M,
        axis: usize,
        u_minus: &[f64],
        u_plus: &[f64],
        epoch: Epoch,
        dx: f64,
        dt: f64,
        stabilizers: Stabilizers,
    ) -> Self {
        let v_minus = evaluate_states(model, u_minus, 1).v;
        let v_plus = evaluate_states(model, u_plus, 1).v;
        let a = potential_hessian(model, axis, &mean(&v_minus, &v_plus));
        let b = entropy_hessian(model, &mean(u_minus, u_plus));
        let lambda = stabilizers.clip_wave_speed(wave_speed(&a, &b), dx, dt);
        FluxContext {
            u_minus: u_minus.to_vec(),
            u_plus: u_plus.to_vec(),
            v_minus,
            v_plus,
            lambda_max: lambda,
            epoch,
            dx,
            dt,
            stabilizers,
        }
    }

    pub fn u_bar(&self) -> Vec<f64> {
        mean(&self.u_minus, &self.u_plus)
    }
    pub fn v_bar(&self) -> Vec<f64> {
        mean(&self.v_minus, &self.v_plus)
    }
    pub fn jump_u(&self) -> Vec<f64> {
        jump(&self.u_minus, &self.u_plus)
    }
    pub fn jump_v(&self) -> Vec<f64> {
        jump(&self.v_minus, &self.v_plus)
    }
}

/// Tadmor-type flux `f*` with `[[v]] . f* = [[phi]]`, built from the
/// physical flux and the potential `phi(v(u))`, both as functions of `u`.
/// A vanishing jump in `v` returns the mean flux.
pub fn entropy_conservative_flux(
    ctx: &FluxContext,
    flux_fn: impl Fn(&[f64]) -> Vec<f64>,
    potential_fn: impl Fn(&[f64]) -> f64,
) -> Vec<f64> {
    let fm = flux_fn(&ctx.u_minus);
    let fp = flux_fn(&ctx.u_plus);
    let fsum: Vec<f64> = fm.iter().zip(&fp).map(|(a, b)| a + b).collect();
    let jv = ctx.jump_v();
    let vbar = ctx.v_bar();
    let n2 = dot(&jv, &jv);
    let coef = if n2 > DEGENERATE_JUMP * (1.0 + dot(&vbar, &vbar)) {
        let jphi = potential_fn(&ctx.u_plus) - potential_fn(&ctx.u_minus);
        (jphi - 0.5 * dot(&jv, &fsum)) / n2
    } else {
        0.0
    };
    fsum.iter().zip(&jv).map(|(s, j)| 0.5 * s + coef * j).collect()
}

/// `f* - lambda/2 * w` with `w` from the stabilized jump solve.
pub fn entropy_stable_flux<M: LawModel>(ctx: &FluxContext, model: &M, axis: usize) -> Result<Vec<f64>, FluxError> {
    let fstar = entropy_conservative_flux(
        ctx,
        |u| evaluate_states(model, u, 1).flux.swap_remove(axis),
        |u| evaluate_states(model, u, 1).potential[axis][0],
    );
    let b: SymMatrix = entropy_hessian(model, &ctx.u_bar());
    let b_reg = ctx.stabilizers.regularize_hessian(&b, ctx.epoch);
    let (w, _) = ctx.stabilizers.stabilized_jump_solve(&b_reg, &ctx.jump_v(), &ctx.jump_u(), 0)?;
    let out: Vec<f64> = fstar.iter().zip(&w).map(|(f, wi)| f - 0.5 * ctx.lambda_max * wi).collect();
    if out.iter().any(|x| !x.is_finite()) {
        return Err(FluxError::NonFinite { interface: 0, what: "flux" });
    }
    Ok(out)
}
