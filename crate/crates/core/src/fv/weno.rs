//! Fifth-order WENO reconstruction of interface values.
//!
//! Candidates are written as corrections to the centre value, so a constant
//! stencil reproduces its value exactly. The tape version performs the same
//! floating-point operations in the same order as the plain one.

use crate::autodiff::{Tape, Var};

const LINEAR_WEIGHTS: [f64; 3] = [0.1, 0.6, 0.3];

/// Left-biased value at the right face of the middle cell of
/// `(u_{j-2}, u_{j-1}, u_j, u_{j+1}, u_{j+2})`. The right-biased value at the
/// left face is obtained by passing the stencil reversed.
#[inline]
pub fn weno5_reconstruct(s: [f64; 5], dx: f64) -> f64 {
    let [a, b, c, d, e] = s;
    let dx2 = dx * dx;
    let t0 = a - 2.0 * b + c;
    let t1 = b - 2.0 * c + d;
    let t2 = c - 2.0 * d + e;
    let r0 = a - 4.0 * b + 3.0 * c;
    let r1 = b - d;
    let r2 = 3.0 * c - 4.0 * d + e;
    let beta0 = (13.0 / 12.0) * (t0 * t0) + 0.25 * (r0 * r0);
    let beta1 = (13.0 / 12.0) * (t1 * t1) + 0.25 * (r1 * r1);
    let beta2 = (13.0 / 12.0) * (t2 * t2) + 0.25 * (r2 * r2);
    let alpha = |beta: f64, ck: f64| {
        let q = beta + dx2;
        (1.0 / (q * q)) * ck
    };
    let a0 = alpha(beta0, LINEAR_WEIGHTS[0]);
    let a1 = alpha(beta1, LINEAR_WEIGHTS[1]);
    let a2 = alpha(beta2, LINEAR_WEIGHTS[2]);
    let inv = 1.0 / (a0 + a1 + a2);
    // candidate minus centre value
    let q0 = (a - b) * (1.0 / 3.0) + (c - b) * (5.0 / 6.0);
    let q1 = (d - c) * (1.0 / 3.0) + (b - c) * (-1.0 / 6.0);
    let q2 = (d - c) * (5.0 / 6.0) + (e - c) * (-1.0 / 6.0);
    c + ((a0 * inv) * q0 + (a1 * inv) * q1 + (a2 * inv) * q2)
}

/// Componentwise [`weno5_reconstruct`] on tape nodes of equal shape.
pub fn weno5_tape(t: &mut Tape<f64>, s: [Var; 5], dx: f64) -> Var {
    let [a, b, c, d, e] = s;
    let dx2 = dx * dx;
    // a - 2b + c etc., with the same association as the plain version
    let lin3 = |t: &mut Tape<f64>, x: Var, cx: f64, y: Var, cy: f64, z: Var, cz: f64| {
        let xs = if cx == 1.0 { x } else { t.scale(x, cx) };
        let ys = t.scale(y, cy);
        let xy = t.add(xs, ys);
        let zs = if cz == 1.0 { z } else { t.scale(z, cz) };
        t.add(xy, zs)
    };
    let t0 = lin3(t, a, 1.0, b, -2.0, c, 1.0);
    let t1 = lin3(t, b, 1.0, c, -2.0, d, 1.0);
    let t2 = lin3(t, c, 1.0, d, -2.0, e, 1.0);
    let r0 = lin3(t, a, 1.0, b, -4.0, c, 3.0);
    let r1 = t.sub(b, d);
    let r2 = lin3(t, c, 3.0, d, -4.0, e, 1.0);
    let beta = |t: &mut Tape<f64>, tk: Var, rk: Var| {
        let ts = t.square(tk);
        let ta = t.scale(ts, 13.0 / 12.0);
        let rs = t.square(rk);
        let ra = t.scale(rs, 0.25);
        t.add(ta, ra)
    };
    let b0 = beta(t, t0, r0);
    let b1 = beta(t, t1, r1);
    let b2 = beta(t, t2, r2);
    let alpha = |t: &mut Tape<f64>, bk: Var, ck: f64| {
        let q = t.offset(bk, dx2);
        let q2 = t.square(q);
        let r = t.recip(q2);
        t.scale(r, ck)
    };
    let a0 = alpha(t, b0, LINEAR_WEIGHTS[0]);
    let a1 = alpha(t, b1, LINEAR_WEIGHTS[1]);
    let a2 = alpha(t, b2, LINEAR_WEIGHTS[2]);
    let s01 = t.add(a0, a1);
    let sum = t.add(s01, a2);
    let inv = t.recip(sum);
    let diff_pair = |t: &mut Tape<f64>, x: Var, y: Var, cx: f64, z: Var, w: Var, cz: f64| {
        let xy = t.sub(x, y);
        let xs = t.scale(xy, cx);
        let zw = t.sub(z, w);
        let zs = t.scale(zw, cz);
        t.add(xs, zs)
    };
    let q0 = diff_pair(t, a, b, 1.0 / 3.0, c, b, 5.0 / 6.0);
    let q1 = diff_pair(t, d, c, 1.0 / 3.0, b, c, -1.0 / 6.0);
    let q2 = diff_pair(t, d, c, 5.0 / 6.0, e, c, -1.0 / 6.0);
    let w0 = t.mul(a0, inv);
    let w1 = t.mul(a1, inv);
    let w2 = t.mul(a2, inv);
    let m0 = t.mul(w0, q0);
    let m1 = t.mul(w1, q1);
    let m2 = t.mul(w2, q2);
    let s = t.add(m0, m1);
    let s = t.add(s, m2);
    t.add(c, s)
}
