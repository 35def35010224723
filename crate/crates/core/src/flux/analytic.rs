//! Closed-form entropy/potential pairs, used to check the flux machinery
//! against known answers.

use crate::autodiff::{Real, Tape, Var};
use crate::linalg::SymMatrix;
use crate::networks::{Jet, LawModel};

/// Scalar Burgers in entropy form: `eta = u^2/2`, `phi_i(v) = v^3/6` on
/// every axis, so `f_i(u) = u^2/2`.
#[derive(Clone, Debug)]
pub struct BurgersLaw {
    pub d: usize,
}

/// Linear symmetric system: `eta = |u|^2/2`, `phi_i(v) = v^T A_i v / 2`,
/// so `f_i(u) = A_i u`.
#[derive(Clone, Debug)]
pub struct LinearLaw {
    pub matrices: Vec<SymMatrix>,
}

fn half_square_norm<T: Real>(t: &mut Tape<T>, x: Var, order: usize) -> Jet {
    let p = t.shape(x).rows;
    let half = t.filled(0.5, 1, p);
    Jet::input(t, x, order).square(t).affine(t, half, None)
}

impl LawModel for BurgersLaw {
    type Handles = ();

    fn state_dim(&self) -> usize {
        1
    }
    fn space_dim(&self) -> usize {
        self.d
    }
    fn register<T: Real>(&self, _t: &mut Tape<T>, _trainable: bool) {}

    fn entropy_jet<T: Real>(&self, t: &mut Tape<T>, _h: &(), u: Var, order: usize) -> Jet {
        half_square_norm(t, u, order)
    }

    fn potential_jet<T: Real>(&self, t: &mut Tape<T>, _h: &(), _axis: usize, v: Var, order: usize) -> Jet {
        let x = Jet::input(t, v, order);
        let cube = x.square(t).mul(t, &x);
        let sixth = t.filled(1.0 / 6.0, 1, 1);
        cube.affine(t, sixth, None)
    }
}

impl LawModel for LinearLaw {
    type Handles = Vec<Var>;

    fn state_dim(&self) -> usize {
        self.matrices[0].dim()
    }
    fn space_dim(&self) -> usize {
        self.matrices.len()
    }
    fn register<T: Real>(&self, t: &mut Tape<T>, _trainable: bool) -> Vec<Var> {
        self.matrices.iter().map(|m| t.leaf_f64(m.as_slice(), m.dim(), m.dim(), false)).collect()
    }

    fn entropy_jet<T: Real>(&self, t: &mut Tape<T>, _h: &Vec<Var>, u: Var, order: usize) -> Jet {
        half_square_norm(t, u, order)
    }

    fn potential_jet<T: Real>(&self, t: &mut Tape<T>, h: &Vec<Var>, axis: usize, v: Var, order: usize) -> Jet {
        let p = self.state_dim();
        let x = Jet::input(t, v, order);
        let av = x.affine(t, h[axis], None);
        let half = t.filled(0.5, 1, p);
        av.mul(t, &x).affine(t, half, None)
    }
}
