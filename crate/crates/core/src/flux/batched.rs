//! Entropy-stable fluxes for a whole batch of interfaces, recorded on a tape.

use super::{wave_speed, Epoch, FluxError, Stabilizers, DEGENERATE_JUMP};
use crate::autodiff::{Tape, Var};
use crate::linalg::SymMatrix;
use crate::networks::LawModel;

#[derive(Clone, Copy, Debug)]
pub struct FluxSettings {
    pub epoch: Epoch,
    /// Cell width along the flux direction.
    pub dx: f64,
    pub dt: f64,
    pub stabilizers: Stabilizers,
}

fn split_cols(t: &mut Tape<f64>, x: Var, n: usize) -> (Var, Var) {
    let lo: Vec<usize> = (0..n).collect();
    let hi: Vec<usize> = (n..2 * n).collect();
    (t.gather(x, &lo), t.gather(x, &hi))
}

fn rows(t: &mut Tape<f64>, x: Var) -> Vec<Var> {
    (0..t.shape(x).rows).map(|k| t.row(x, k)).collect()
}

/// `sum_k a_k * b_k` over explicit row lists.
fn row_dot(t: &mut Tape<f64>, a: &[Var], b: &[Var]) -> Var {
    let mut acc = t.mul(a[0], b[0]);
    for k in 1..a.len() {
        let term = t.mul(a[k], b[k]);
        acc = t.add(acc, term);
    }
    acc
}

fn first_bad(values: &[f64], n: usize) -> Option<usize> {
    values.iter().position(|x| !x.is_finite()).map(|i| i % n)
}

/// Solves `B w = r` column by column by cofactors (`p <= 3`). `b` holds the
/// `1 x N` rows of the symmetric matrix, row-major.
fn cofactor_solve(t: &mut Tape<f64>, b: &[Var], r: &[Var], p: usize) -> Result<Vec<Var>, FluxError> {
    let at = |i: usize, j: usize| b[i * p + j];
    let (det, adj): (Var, Vec<Vec<Var>>) = match p {
        1 => {
            let one = t.filled(1.0, 1, t.shape(b[0]).cols);
            (at(0, 0), vec![vec![one]])
        }
        2 => {
            let d0 = t.mul(at(0, 0), at(1, 1));
            let d1 = t.square(at(0, 1));
            let det = t.sub(d0, d1);
            let neg = t.scale(at(0, 1), -1.0);
            (det, vec![vec![at(1, 1), neg], vec![neg, at(0, 0)]])
        }
        3 => {
            let mut minor = |a: (usize, usize), b2: (usize, usize), c: (usize, usize), d: (usize, usize)| {
                let x = t.mul(at(a.0, a.1), at(b2.0, b2.1));
                let y = t.mul(at(c.0, c.1), at(d.0, d.1));
                t.sub(x, y)
            };
            let c00 = minor((1, 1), (2, 2), (1, 2), (1, 2));
            let c01 = minor((0, 2), (1, 2), (0, 1), (2, 2));
            let c02 = minor((0, 1), (1, 2), (0, 2), (1, 1));
            let c11 = minor((0, 0), (2, 2), (0, 2), (0, 2));
            let c12 = minor((0, 1), (0, 2), (0, 0), (1, 2));
            let c22 = minor((0, 0), (1, 1), (0, 1), (0, 1));
            let det = row_dot(t, &[at(0, 0), at(0, 1), at(0, 2)], &[c00, c01, c02]);
            (det, vec![vec![c00, c01, c02], vec![c01, c11, c12], vec![c02, c12, c22]])
        }
        _ => panic!("cofactor_solve supports p <= 3, got {p}"),
    };
    let dv = t.value(det);
    if let Some(i) = dv.iter().position(|&d| d == 0.0 || !d.is_finite()) {
        return Err(FluxError::SingularHessian { interface: i });
    }
    let inv = t.recip(det);
    Ok((0..p)
        .map(|k| {
            let num = row_dot(t, &adj[k], r);
            t.mul(num, inv)
        })
        .collect())
}

/// Output of [`entropy_stable_fluxes`].
#[derive(Clone, Debug)]
pub struct InterfaceFluxes {
    /// `p x N` flux node.
    pub flux: Var,
    /// Clipped wave speed used at each interface.
    pub wave_speeds: Vec<f64>,
}

/// Entropy-stable fluxes at `N` interfaces along `axis`.
///
/// `um`, `up` are the reconstructed `p x N` states on either side. Wave
/// speeds enter as constants (no gradient flows through them); everything
/// else is differentiable. Passing `frozen` reuses given clipped wave speeds
/// instead of computing them, which is how finite-difference checks hold
/// them fixed.
pub fn entropy_stable_fluxes<M: LawModel>(
    t: &mut Tape<f64>,
    model: &M,
    handles: &M::Handles,
    axis: usize,
    um: Var,
    up: Var,
    settings: &FluxSettings,
    frozen: Option<&[f64]>,
) -> Result<InterfaceFluxes, FluxError> {
    let p = model.state_dim();
    let n = t.shape(um).cols;
    assert_eq!(t.shape(um).rows, p);

    // entropy variables on both sides in one pass
    let ucat = t.concat_cols(um, up);
    let ej = model.entropy_jet(t, handles, ucat, 1);
    let vcat = ej.gradient_block(t);
    if let Some(i) = first_bad(t.value(vcat), 2 * n) {
        return Err(FluxError::NonFinite { interface: i % n, what: "entropy variables" });
    }
    let (vm, vp) = split_cols(t, vcat, n);

    // potential and flux on both sides
    let pj = model.potential_jet(t, handles, axis, vcat, 1);
    let fcat = pj.gradient_block(t);
    let (fm, fp) = split_cols(t, fcat, n);
    let (phim, phip) = split_cols(t, pj.value, n);

    // Hessians at the means
    let usum = t.add(um, up);
    let ubar = t.scale(usum, 0.5);
    let eb = model.entropy_jet(t, handles, ubar, 2);
    let vsum = t.add(vm, vp);
    let vbar = t.scale(vsum, 0.5);
    let pb = model.potential_jet(t, handles, axis, vbar, 2);
    let mut b_rows = Vec::with_capacity(p * p);
    let mut a_rows = Vec::with_capacity(p * p);
    for k in 0..p {
        for l in 0..p {
            b_rows.push(eb.hess_or_zero(t, k, l));
            a_rows.push(pb.hess_or_zero(t, k, l));
        }
    }

    // wave speeds, as constants
    let cap = settings.stabilizers.cfl * settings.dx / settings.dt;
    let a_vals: Vec<Vec<f64>> = a_rows.iter().map(|&v| t.primal(v)).collect();
    let b_vals: Vec<Vec<f64>> = b_rows.iter().map(|&v| t.primal(v)).collect();
    let wave_speeds = match frozen {
        Some(l) => {
            assert_eq!(l.len(), n, "frozen wave speeds have the wrong length");
            l.to_vec()
        }
        None => {
            let mut out = vec![0.0; n];
            for (i, lam) in out.iter_mut().enumerate() {
                let a = SymMatrix::from_row_major(p, a_vals.iter().map(|r| r[i]).collect());
                let b = SymMatrix::from_row_major(p, b_vals.iter().map(|r| r[i]).collect());
                let raw = wave_speed(&a, &b);
                if !raw.is_finite() {
                    return Err(FluxError::NonFinite { interface: i, what: "wave speed" });
                }
                *lam = raw.min(cap);
            }
            out
        }
    };
    let half: Vec<f64> = wave_speeds.iter().map(|l| 0.5 * l).collect();
    let half_lambda = t.leaf_f64(&half, 1, n, false);

    // entropy-conservative part
    let jv = t.sub(vp, vm);
    let ju = t.sub(up, um);
    let fsum = t.add(fm, fp);
    let jphi = t.sub(phip, phim);
    let jv2 = t.square(jv);
    let n2 = t.sum_rows(jv2);
    let vbar2 = t.square(vbar);
    let vbar_n2 = t.sum_rows(vbar2);
    let ok: Vec<bool> =
        t.value(n2).iter().zip(t.value(vbar_n2)).map(|(&a, &b)| a > DEGENERATE_JUMP * (1.0 + b)).collect();
    let ones = t.filled(1.0, 1, n);
    let zeros = t.filled(0.0, 1, n);
    let jv_rows = rows(t, jv);
    let fsum_rows = rows(t, fsum);
    let proj = row_dot(t, &jv_rows, &fsum_rows);
    let half_proj = t.scale(proj, 0.5);
    let num = t.sub(jphi, half_proj);
    let safe = t.select(&ok, n2, ones);
    let inv = t.recip(safe);
    let coef = t.mul(num, inv);
    let coef = t.select(&ok, coef, zeros);
    let mean = t.scale(fsum, 0.5);
    let corr = t.mul_row(jv, coef);
    let fstar = t.add(mean, corr);

    // stabilized dissipation direction
    let shift = settings.stabilizers.hessian_shift(settings.epoch);
    if shift != 0.0 {
        for k in 0..p {
            b_rows[k * p + k] = t.offset(b_rows[k * p + k], shift);
        }
    }
    let w_rows = cofactor_solve(t, &b_rows, &jv_rows, p)?;
    let w = t.stack_rows(&w_rows);
    let (wv, juv) = (t.value(w), t.value(ju));
    let mut keep = vec![false; p * n];
    for i in 0..n {
        let wmax = (0..p).fold(0.0f64, |m, k| m.max(wv[k * n + i].abs()));
        let umax = (0..p).fold(0.0f64, |m, k| m.max(juv[k * n + i].abs()));
        let accept = wmax <= settings.stabilizers.jump_ratio * umax;
        for k in 0..p {
            keep[k * n + i] = accept;
        }
    }
    let dir = t.select(&keep, w, ju);
    let diss = t.mul_row(dir, half_lambda);
    let out = t.sub(fstar, diss);
    if let Some(i) = first_bad(t.value(out), n) {
        return Err(FluxError::NonFinite { interface: i, what: "flux" });
    }
    Ok(InterfaceFluxes { flux: out, wave_speeds })
}
