//! Plain-value evaluation of a law model at given states.

use super::jet::Jet;
use super::LawModel;
use crate::autodiff::Tape;
use crate::linalg::SymMatrix;

/// Entropy, entropy variables, potentials and physical fluxes at a batch of
/// states. Blocks are component-major (`p x N`).
#[derive(Clone, Debug)]
pub struct StateEvaluation {
    pub n: usize,
    pub eta: Vec<f64>,
    pub v: Vec<f64>,
    /// Per axis, `phi_i(v)`.
    pub potential: Vec<Vec<f64>>,
    /// Per axis, `f_i(u) = grad phi_i(v)`, `p x N`.
    pub flux: Vec<Vec<f64>>,
}

pub fn evaluate_states<M: LawModel>(model: &M, u: &[f64], n: usize) -> StateEvaluation {
    let p = model.state_dim();
    assert_eq!(u.len(), p * n, "state block must be p x n");
    let mut t = Tape::<f64>::new();
    let h = model.register(&mut t, false);
    let ux = t.constant(u, p, n);
    let ej = model.entropy_jet(&mut t, &h, ux, 1);
    let v = ej.gradient_block(&mut t);
    let mut potential = Vec::new();
    let mut flux = Vec::new();
    for axis in 0..model.space_dim() {
        let pj = model.potential_jet(&mut t, &h, axis, v, 1);
        let f = pj.gradient_block(&mut t);
        potential.push(t.primal(pj.value));
        flux.push(t.primal(f));
    }
    StateEvaluation { n, eta: t.primal(ej.value), v: t.primal(v), potential, flux }
}

fn jet_hessian(t: &mut Tape<f64>, j: &Jet) -> SymMatrix {
    let p = j.dim();
    let mut m = SymMatrix::zeros(p);
    for k in 0..p {
        for l in 0..p {
            let h = j.hess_or_zero(t, k, l);
            m.set(k, l, t.scalar(h));
        }
    }
    m
}

pub fn entropy<M: LawModel>(model: &M, u: &[f64]) -> f64 {
    evaluate_states(model, u, 1).eta[0]
}

pub fn entropy_variables<M: LawModel>(model: &M, u: &[f64]) -> Vec<f64> {
    evaluate_states(model, u, 1).v
}

pub fn physical_flux<M: LawModel>(model: &M, axis: usize, u: &[f64]) -> Vec<f64> {
    evaluate_states(model, u, 1).flux.swap_remove(axis)
}

pub fn entropy_hessian<M: LawModel>(model: &M, u: &[f64]) -> SymMatrix {
    let mut t = Tape::<f64>::new();
    let h = model.register(&mut t, false);
    let x = t.constant(u, u.len(), 1);
    let j = model.entropy_jet(&mut t, &h, x, 2);
    jet_hessian(&mut t, &j)
}

pub fn potential<M: LawModel>(model: &M, axis: usize, v: &[f64]) -> f64 {
    let mut t = Tape::<f64>::new();
    let h = model.register(&mut t, false);
    let x = t.constant(v, v.len(), 1);
    let j = model.potential_jet(&mut t, &h, axis, x, 0);
    t.scalar(j.value)
}

pub fn potential_gradient<M: LawModel>(model: &M, axis: usize, v: &[f64]) -> Vec<f64> {
    let mut t = Tape::<f64>::new();
    let h = model.register(&mut t, false);
    let x = t.constant(v, v.len(), 1);
    let j = model.potential_jet(&mut t, &h, axis, x, 1);
    let g = j.gradient_block(&mut t);
    t.primal(g)
}

pub fn potential_hessian<M: LawModel>(model: &M, axis: usize, v: &[f64]) -> SymMatrix {
    let mut t = Tape::<f64>::new();
    let h = model.register(&mut t, false);
    let x = t.constant(v, v.len(), 1);
    let j = model.potential_jet(&mut t, &h, axis, x, 2);
    jet_hessian(&mut t, &j)
}
