//! Reverse-mode automatic differentiation.
//!
//! [`Tape`] records batched tensor operations; [`grad`] and [`hessian`] are
//! the pointwise conveniences built on it. Hessians use forward-over-reverse:
//! the tape runs on [`Dual`] numbers whose tangents are seeded along
//! coordinate directions, and the reverse sweep then returns Hessian columns.

mod real;
mod tape;

pub use real::{sigmoid_f64, softplus_f64, Dual, Real, MAX_SEEDS};
pub use tape::{sign, Shape, Tape, UnaryOp, Var};

use crate::linalg::SymMatrix;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AdError {
    #[error("unsupported operation `{0}`")]
    UnsupportedOp(String),
    #[error("expected {expected} values, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("function output is not a scalar ({rows}x{cols})")]
    NotScalar { rows: usize, cols: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// A scalar function of a column vector, written once against the tape so
/// it can run on any [`Real`].
pub trait ScalarFn {
    /// Builds `f(x)` for an `n x 1` input `x`; must return a `1 x 1` node.
    fn build<T: Real>(&self, tape: &mut Tape<T>, x: Var) -> Var;
}

fn check_scalar<T: Real>(tape: &Tape<T>, y: Var) -> Result<(), AdError> {
    let s = tape.shape(y);
    if s.len() != 1 {
        return Err(AdError::NotScalar { rows: s.rows, cols: s.cols });
    }
    Ok(())
}

/// Value and gradient of `f` at `x`.
pub fn value_and_grad<F: ScalarFn>(f: &F, x: &[f64]) -> Result<(f64, Vec<f64>), AdError> {
    let mut tape = Tape::<f64>::new();
    let xv = tape.input(x, x.len(), 1);
    let y = f.build(&mut tape, xv);
    check_scalar(&tape, y)?;
    tape.backward(y, &[1.0])?;
    let value = tape.scalar(y);
    let g = tape.adjoint(xv).to_vec();
    if !value.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(AdError::NonFinite("gradient"));
    }
    Ok((value, g))
}

pub fn grad<F: ScalarFn>(f: &F, x: &[f64]) -> Result<Vec<f64>, AdError> {
    value_and_grad(f, x).map(|(_, g)| g)
}

/// Hessian columns as computed, before symmetrization. Column `j` is the
/// directional derivative of the gradient along `e_j`.
pub fn hessian_raw<F: ScalarFn>(f: &F, x: &[f64]) -> Result<SymMatrix, AdError> {
    let n = x.len();
    let mut h = SymMatrix::zeros(n);
    let mut tape = Tape::<Dual>::new();
    for first in (0..n).step_by(MAX_SEEDS) {
        let seeds = (n - first).min(MAX_SEEDS);
        tape.clear();
        let xs: Vec<Dual> = x
            .iter()
            .enumerate()
            .map(
                |(i, &xi)| {
                    if i >= first && i < first + seeds {
                        Dual::seeded(xi, i - first)
                    } else {
                        Dual::constant(xi)
                    }
                },
            )
            .collect();
        let xv = tape.input(&xs, n, 1);
        let y = f.build(&mut tape, xv);
        check_scalar(&tape, y)?;
        tape.backward(y, &[Dual::constant(1.0)])?;
        let adj = tape.adjoint(xv);
        for (i, a) in adj.iter().enumerate() {
            for s in 0..seeds {
                h.set(i, first + s, a.eps[s]);
            }
        }
    }
    if h.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(AdError::NonFinite("hessian"));
    }
    Ok(h)
}

/// Symmetric Hessian of `f` at `x`.
pub fn hessian<F: ScalarFn>(f: &F, x: &[f64]) -> Result<SymMatrix, AdError> {
    hessian_raw(f, x).map(|h| h.symmetrized())
}

#[cfg(test)]
mod tests;
