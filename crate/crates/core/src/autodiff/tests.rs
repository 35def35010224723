use super::*;
use proptest::prelude::*;

struct SumSquares;
impl ScalarFn for SumSquares {
    fn build<T: Real>(&self, t: &mut Tape<T>, x: Var) -> Var {
        let sq = t.square(x);
        t.sum(sq)
    }
}

struct HalfNormSquared;
impl ScalarFn for HalfNormSquared {
    fn build<T: Real>(&self, t: &mut Tape<T>, x: Var) -> Var {
        let sq = t.square(x);
        let s = t.sum(sq);
        t.scale(s, 0.5)
    }
}

struct Bilinear;
impl ScalarFn for Bilinear {
    fn build<T: Real>(&self, t: &mut Tape<T>, x: Var) -> Var {
        let a = t.row(x, 0);
        let b = t.row(x, 1);
        t.mul(a, b)
    }
}

/// Touches every op kind: `sum(W x + b)` pieces pushed through unaries,
/// row broadcasts, stacking, gathers and a select.
struct Kitchen;
impl ScalarFn for Kitchen {
    fn build<T: Real>(&self, t: &mut Tape<T>, x: Var) -> Var {
        let w = t.leaf_f64(&[0.3, -0.7, 1.1, 0.4, 0.2, -0.5, 0.9, 0.1, -0.3], 3, 3, false);
        let b = t.leaf_f64(&[0.1, -0.2, 0.05], 3, 1, false);
        let z = t.matmul(w, x);
        let z = t.add_bias(z, b);
        let a = t.tanh(z);
        let s = t.softplus(z);
        let g = t.sigmoid(z);
        let h = t.huber(z);
        let r = t.relu(z);
        let ab = t.abs(z);
        let q = t.offset(ab, 2.0);
        let rq = t.recip(q);
        let sq = t.sqrt(q);
        let m1 = t.mul(a, s);
        let m2 = t.sub(g, h);
        let m3 = t.add(r, rq);
        let row = t.row(sq, 1);
        let cat = t.concat_cols(m1, m2);
        let rowcat = t.concat_cols(row, row);
        let mr = t.mul_row(cat, rowcat);
        let st = t.stack_rows(&[mr, rowcat]);
        let ga = t.gather(st, &[1, 0, 0, 1]);
        let mask: Vec<bool> = (0..16).map(|k| k % 3 != 0).collect();
        let gb = t.gather(st, &[0, 1, 1, 1]);
        let sel = t.select(&mask, ga, gb);
        let cs = t.sum_rows(sel);
        let s1 = t.sum(cs);
        let s2 = t.sum(m3);
        let tot = t.add(s1, s2);
        t.scale(tot, 0.7)
    }
}

fn central_diff<F: ScalarFn>(f: &F, x: &[f64], h: f64) -> Vec<f64> {
    let eval = |y: &[f64]| {
        let mut t = Tape::<f64>::new();
        let v = t.constant(y, y.len(), 1);
        let out = f.build(&mut t, v);
        t.scalar(out)
    };
    (0..x.len())
        .map(|i| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            (eval(&xp) - eval(&xm)) / (2.0 * h)
        })
        .collect()
}

#[test]
fn gradient_of_sum_of_squares() {
    assert_eq!(grad(&SumSquares, &[1.0, 2.0]).unwrap(), vec![2.0, 4.0]);
}

#[test]
fn hessians_of_quadratics() {
    assert_eq!(hessian(&HalfNormSquared, &[0.3, -1.2, 4.0]).unwrap(), SymMatrix::identity(3));
    let h = hessian(&Bilinear, &[2.0, 5.0]).unwrap();
    assert_eq!(h, SymMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]));
}

#[test]
fn hessian_handles_more_than_max_seeds() {
    let h = hessian(&HalfNormSquared, &[1.0; 5]).unwrap();
    assert_eq!(h, SymMatrix::identity(5));
}

#[test]
fn unknown_op_name_is_rejected() {
    assert_eq!("erf".parse::<UnaryOp>(), Err(AdError::UnsupportedOp("erf".into())));
    for op in UnaryOp::ALL {
        assert_eq!(op.name().parse::<UnaryOp>().unwrap(), op);
    }
}

#[test]
fn non_scalar_output_is_an_error() {
    struct Identity;
    impl ScalarFn for Identity {
        fn build<T: Real>(&self, _t: &mut Tape<T>, x: Var) -> Var {
            x
        }
    }
    assert_eq!(grad(&Identity, &[1.0, 2.0]), Err(AdError::NotScalar { rows: 2, cols: 1 }));
}

#[test]
fn select_guards_a_division() {
    // Substituting a safe denominator keeps the masked lane finite in both
    // directions.
    let mut t = Tape::<f64>::new();
    let x = t.input(&[0.0, 4.0], 2, 1);
    let ones = t.filled(1.0, 2, 1);
    let mask = [false, true];
    let safe = t.select(&mask, x, ones);
    let inv = t.recip(safe);
    let out = t.select(&mask, inv, x);
    let s = t.sum(out);
    t.backward(s, &[1.0]).unwrap();
    assert_eq!(t.adjoint(x), &[1.0, -0.0625]);
}

#[test]
fn replay_is_bit_exact() {
    let mut t = Tape::<f64>::new();
    let x = t.input(&[0.4, -1.3, 2.2], 3, 1);
    Kitchen.build(&mut t, x);
    assert_eq!(t.replay(), t.arena());
}

#[test]
fn untouched_branches_get_zero_adjoint() {
    let mut t = Tape::<f64>::new();
    let x = t.input(&[1.0, 2.0], 2, 1);
    let y = t.input(&[3.0, 4.0], 2, 1);
    let _unused = t.mul(x, y);
    let s = t.sum(x);
    t.backward(s, &[1.0]).unwrap();
    assert_eq!(t.adjoint(y), &[0.0, 0.0]);
}

proptest! {
    #[test]
    fn kitchen_gradient_matches_finite_differences(
        x in prop::collection::vec(-2.0f64..2.0, 3)
    ) {
        // keep away from the kinks of relu/abs/huber
        let w = [[0.3, -0.7, 1.1], [0.4, 0.2, -0.5], [0.9, 0.1, -0.3]];
        let bias = [0.1, -0.2, 0.05];
        for (row, b) in w.iter().zip(bias) {
            let z: f64 = row.iter().zip(&x).map(|(a, c)| a * c).sum::<f64>() + b;
            prop_assume!(z.abs() > 1e-3 && (z.abs() - 1.0).abs() > 1e-3);
        }
        let g = grad(&Kitchen, &x).unwrap();
        let fd = central_diff(&Kitchen, &x, 1e-6);
        for (a, b) in g.iter().zip(&fd) {
            prop_assert!((a - b).abs() <= 1e-6 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn smooth_unary_hessians_match_finite_differences(
        x in prop::collection::vec(0.2f64..2.0, 2),
        op_idx in 0usize..4,
    ) {
        struct Smooth(UnaryOp);
        impl ScalarFn for Smooth {
            fn build<T: Real>(&self, t: &mut Tape<T>, x: Var) -> Var {
                let a = t.row(x, 0);
                let b = t.row(x, 1);
                let ab = t.mul(a, b);
                let s = t.add(ab, a);
                let u = t.unary(self.0, s);
                let v = t.unary(self.0, b);
                let w = t.mul(u, v);
                t.sum(w)
            }
        }
        let op = [UnaryOp::Tanh, UnaryOp::Softplus, UnaryOp::Sigmoid, UnaryOp::Sqrt][op_idx];
        let f = Smooth(op);
        let h = hessian_raw(&f, &x).unwrap();
        prop_assert!(h.max_asymmetry() <= 1e-12);
        let step = 1e-5;
        for j in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += step;
            xm[j] -= step;
            let gp = grad(&f, &xp).unwrap();
            let gm = grad(&f, &xm).unwrap();
            for i in 0..2 {
                let fd = (gp[i] - gm[i]) / (2.0 * step);
                prop_assert!((h.get(i, j) - fd).abs() <= 1e-6 * (1.0 + fd.abs()));
            }
        }
    }
}
