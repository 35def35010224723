use super::eval::*;
use super::*;
use crate::autodiff::{grad, hessian, Tape};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_model(p: usize, d: usize, seed: u64) -> LearnedLaw {
    let arch = Architecture { p, d, potential_hidden: vec![8, 8], entropy_hidden: vec![8, 8] };
    let mut m = LearnedLaw::new(arch, seed);
    // move away from the initial W_s = 1, W_l = 0 so all terms matter
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    use rand::Rng;
    for w in m.entropy.quad_weight.iter_mut() {
        *w = rng.random_range(-2.0..2.0);
    }
    for w in m.entropy.lin_weight.iter_mut() {
        *w = rng.random_range(-1.0..1.0);
    }
    m.entropy.out_bias = 0.3;
    m
}

#[test]
fn fcnn_jet_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let net = Fcnn::new(2, &[32], &mut rng);
    let arch = Architecture { p: 2, d: 1, potential_hidden: vec![32], entropy_hidden: vec![4] };
    let mut model = LearnedLaw::new(arch, 0);
    model.potentials[0] = net.clone();
    let v = [0.3, -0.7];
    let g = potential_gradient(&model, 0, &v);
    let h = 1e-5;
    for k in 0..2 {
        let mut vp = v;
        let mut vm = v;
        vp[k] += h;
        vm[k] -= h;
        let fd = (potential(&model, 0, &vp) - potential(&model, 0, &vm)) / (2.0 * h);
        assert!((g[k] - fd).abs() <= 1e-6, "{} vs {}", g[k], fd);
    }
    let reverse = grad(&net, &v).unwrap();
    for k in 0..2 {
        assert!((reverse[k] - g[k]).abs() <= 1e-14);
    }
}

#[test]
fn icnn_hessian_matches_nested_finite_differences() {
    let model = small_model(2, 1, 3);
    let u = [0.5, 0.5];
    let hs = entropy_hessian(&model, &u);
    let step = 1e-4;
    let f = |x: &[f64]| entropy(&model, x);
    for i in 0..2 {
        for j in 0..2 {
            let at = |di: f64, dj: f64| {
                let mut x = u.to_vec();
                x[i] += di;
                x[j] += dj;
                f(&x)
            };
            let fd = (at(step, step) - at(step, -step) - at(-step, step) + at(-step, -step)) / (4.0 * step * step);
            assert!((hs.get(i, j) - fd).abs() <= 1e-4, "({i},{j}) {} vs {}", hs.get(i, j), fd);
        }
    }
    assert_eq!(hs.max_asymmetry(), 0.0);
}

#[test]
fn jet_hessians_agree_with_forward_over_reverse() {
    for p in 1..=3 {
        let model = small_model(p, 2, 11 + p as u64);
        let u: Vec<f64> = (0..p).map(|k| 0.4 - 0.3 * k as f64).collect();
        let a = entropy_hessian(&model, &u);
        let b = hessian(&model.entropy, &u).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
        let c = potential_hessian(&model, 1, &u);
        let d = hessian(&model.potentials[1], &u).unwrap();
        for (x, y) in c.as_slice().iter().zip(d.as_slice()) {
            assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }
}

#[test]
fn fresh_entropy_network_has_unit_quadratic_weight() {
    let m = LearnedLaw::new(Architecture::default_for(1, 1), 0);
    assert_eq!(m.entropy.quad_weight, vec![1.0]);
    assert_eq!(m.entropy.lin_weight, vec![0.0]);
    assert!(m.entropy.is_projected());
    // huber(1) = 1/2, so the quadratic term alone contributes x^2/2
    let mut t = Tape::<f64>::new();
    let w = t.leaf_f64(&[1.0], 1, 1, false);
    let h = t.huber(w);
    assert_eq!(t.value(h), &[0.5]);
}

#[test]
fn projection_clears_negative_hidden_weights() {
    let mut m = small_model(2, 1, 5);
    m.entropy.hidden[1].wz[0] = -3.0;
    m.entropy.out_weight[2] = -0.1;
    m.entropy.hidden[0].wx[0] = -2.0;
    m.project();
    assert!(m.entropy.is_projected());
    assert_eq!(m.entropy.hidden[0].wx[0], -2.0);
}

#[test]
fn flat_round_trip_and_checkpoint_files() {
    let m = small_model(3, 2, 9);
    let flat = m.flatten();
    assert_eq!(flat.len(), m.n_params());
    let mut other = LearnedLaw::new(m.arch.clone(), 1234);
    other.load_flat(&flat).unwrap();
    assert_eq!(other, m);
    assert!(other.load_flat(&flat[1..]).is_err());

    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    save_checkpoint(&m, serde_json::json!({"epoch": 3}), &a).unwrap();
    let (loaded, meta) = load_checkpoint(&a).unwrap();
    assert_eq!(loaded, m);
    assert_eq!(meta.info["epoch"], 3);
    save_checkpoint(&loaded, serde_json::json!({"epoch": 3}), &b).unwrap();
    assert_eq!(std::fs::read(dir.path().join("a.f64")).unwrap(), std::fs::read(dir.path().join("b.f64")).unwrap());
}

#[test]
fn checkpoint_blob_order_starts_with_first_potential_layer() {
    let m = small_model(2, 2, 1);
    let flat = m.flatten();
    let l0 = &m.potentials[0].layers[0];
    assert_eq!(&flat[..l0.weight.len()], l0.weight.as_slice());
    assert_eq!(&flat[l0.weight.len()..l0.weight.len() + l0.bias.len()], l0.bias.as_slice());
    let n = flat.len();
    assert_eq!(&flat[n - 2..], m.entropy.lin_weight.as_slice());
}

/// Sum of fluxes plus a Hessian entry, as a function of all parameters.
fn objective(model: &LearnedLaw, u: &[f64], n: usize, want_grad: bool) -> (f64, Vec<f64>) {
    let p = model.arch.p;
    let mut t = Tape::<f64>::new();
    let h = model.register(&mut t, want_grad);
    let x = t.constant(u, p, n);
    let ej = model.entropy_jet(&mut t, &h, x, 2);
    let v = ej.gradient_block(&mut t);
    let pj = model.potential_jet(&mut t, &h, 0, v, 2);
    let f = pj.gradient_block(&mut t);
    let fs = t.sum(f);
    let b = ej.hess_or_zero(&mut t, 0, p - 1);
    let a = pj.hess_or_zero(&mut t, p - 1, 0);
    let ab = t.mul(a, b);
    let s2 = t.sum(ab);
    let total = t.add(fs, s2);
    let value = t.scalar(total);
    let mut g = vec![0.0; model.n_params()];
    if want_grad {
        t.backward(total, &[1.0]).unwrap();
        LearnedLaw::accumulate_gradient(&t, &h, &mut g);
    }
    (value, g)
}

#[test]
fn parameter_gradient_through_jets_matches_finite_differences() {
    let model = small_model(2, 1, 21);
    let u = [0.3, -0.2, 0.8, 0.1, -0.5, 0.6];
    let (_, g) = objective(&model, &u, 3, true);
    let flat = model.flatten();
    let mut worst: f64 = 0.0;
    for i in (0..flat.len()).step_by(7) {
        let mut plus = model.clone();
        let mut minus = model.clone();
        let h = 1e-6;
        let mut fp = flat.clone();
        fp[i] += h;
        plus.load_flat(&fp).unwrap();
        let mut fm = flat.clone();
        fm[i] -= h;
        minus.load_flat(&fm).unwrap();
        let fd = (objective(&plus, &u, 3, false).0 - objective(&minus, &u, 3, false).0) / (2.0 * h);
        worst = worst.max((g[i] - fd).abs() / (1.0 + fd.abs()));
    }
    assert!(worst < 1e-6, "worst relative error {worst}");
}

proptest! {
    #[test]
    fn projected_entropy_network_is_convex_along_segments(
        seed in 0u64..1000,
        a in prop::collection::vec(-3.0f64..3.0, 3),
        b in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let m = small_model(3, 1, seed);
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        let lhs = entropy(&m, &mid);
        let rhs = 0.5 * (entropy(&m, &a) + entropy(&m, &b));
        prop_assert!(lhs <= rhs + 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn potential_hessian_is_symmetric(seed in 0u64..1000, v in prop::collection::vec(-2.0f64..2.0, 3)) {
        let m = small_model(3, 1, seed);
        let h = potential_hessian(&m, 0, &v);
        prop_assert_eq!(h.max_asymmetry(), 0.0);
        let raw = crate::autodiff::hessian_raw(&m.potentials[0], &v).unwrap();
        prop_assert!(raw.max_asymmetry() <= 1e-12);
    }
}
