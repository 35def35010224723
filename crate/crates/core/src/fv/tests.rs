use super::*;
use crate::autodiff::Tape;
use crate::flux::analytic::BurgersLaw;
use crate::flux::{Epoch, Stabilizers};
use crate::networks::{Architecture, LawModel, LearnedLaw};
use proptest::prelude::*;

struct Burgers;
impl KnownFlux for Burgers {
    fn state_dim(&self) -> usize {
        1
    }
    fn flux(&self, _axis: usize, u: &[f64], out: &mut [f64]) {
        out[0] = 0.5 * u[0] * u[0];
    }
    fn max_speed(&self, _axis: usize, u: &[f64]) -> f64 {
        u[0].abs()
    }
}

fn periodic_1d(values: Vec<f64>, len: f64) -> GridField {
    let n = values.len();
    GridField::from_values(1, vec![n], vec![len / n as f64], vec![BoundaryKind::Periodic], values).unwrap()
}

#[test]
fn weno_reproduces_constants_and_lines() {
    assert_eq!(weno5_reconstruct([0.7; 5], 0.1), 0.7);
    assert_eq!(weno5_reconstruct([-3.25; 5], 1e-3), -3.25);
    let dx = 0.1;
    for j in [2.0f64, 10.0, 57.0] {
        let s = [j - 2.0, j - 1.0, j, j + 1.0, j + 2.0].map(|k| k * dx);
        let v = weno5_reconstruct(s, dx);
        assert!((v - (j + 0.5) * dx).abs() <= 1e-14 * (1.0 + j * dx), "{v}");
    }
}

#[test]
fn weno_step_prefers_smooth_candidate() {
    let v = weno5_reconstruct([0.0, 0.0, 0.0, 1.0, 1.0], 0.01);
    // candidates 0, 1/3, 2/3; linear weights would give 0.4
    assert!((0.0..=1.0).contains(&v));
    assert!(v < 0.4 && v.abs() < (v - 0.4).abs(), "{v}");
}

#[test]
fn weno_tape_matches_plain_bitwise() {
    let cols: Vec<[f64; 5]> =
        (0..20).map(|i| std::array::from_fn(|o| ((i * 5 + o) as f64 * 0.731).sin() * (1.0 + i as f64))).collect();
    let mut t = Tape::<f64>::new();
    let vars: [_; 5] = std::array::from_fn(|o| {
        let v: Vec<f64> = cols.iter().map(|c| c[o]).collect();
        t.constant(&v, 1, cols.len())
    });
    let out = weno5_tape(&mut t, vars, 0.05);
    for (c, &v) in cols.iter().zip(t.value(out)) {
        assert_eq!(weno5_reconstruct(*c, 0.05), v);
    }
}

#[test]
fn ghost_filling() {
    let f = periodic_1d((0..8).map(|i| i as f64).collect(), 8.0);
    let spec = BoundarySpec::frozen_from(&f);
    let pad = fill_ghosts(&f, &spec).unwrap();
    assert_eq!(pad.get(-1, 0), &[7.0]);
    assert_eq!(pad.get(-3, 0), &[5.0]);
    assert_eq!(pad.get(9, 0), &[1.0]);

    let d = GridField::from_values(
        2,
        vec![7],
        vec![1.0],
        vec![BoundaryKind::Dirichlet],
        (0..14).map(|i| i as f64).collect(),
    )
    .unwrap();
    let s = BoundarySpec { axes: vec![AxisBoundary::Dirichlet { low: vec![9.0, 8.0], high: vec![-1.0, -2.0] }] };
    let mut pad = fill_ghosts(&d, &s).unwrap();
    for g in 1..=3 {
        assert_eq!(pad.get(-g, 0), &[9.0, 8.0]);
        assert_eq!(pad.get(6 + g, 0), &[-1.0, -2.0]);
    }
    let before = pad.clone();
    pad.refill(&s);
    assert_eq!(pad, before);
}

#[test]
fn too_few_cells_is_rejected() {
    assert_eq!(GridField::zeros(1, vec![6], vec![1.0], vec![BoundaryKind::Periodic]), Err(FvError::TooFewCells(6)));
}

#[test]
fn constant_fields_are_steady() {
    for d in [1usize, 2] {
        let n = vec![9; d];
        let h = vec![0.3; d];
        let kinds = vec![BoundaryKind::Dirichlet; d];
        let f = GridField::from_values(1, n, h, kinds, vec![0.8; 9usize.pow(d as u32)]).unwrap();
        let spec = BoundarySpec::frozen_from(&f);
        let r = semidiscrete_rhs(&f, &spec, &Rusanov(&Burgers)).unwrap();
        assert!(r.values.iter().all(|&v| v == 0.0));
        let law = BurgersLaw { d };
        let lf = LearnedFlux { model: &law, epoch: Epoch::Training(1), dt: 0.01, stabilizers: Stabilizers::default() };
        let r = semidiscrete_rhs(&f, &spec, &lf).unwrap();
        assert!(r.values.iter().all(|&v| v.abs() <= 1e-15), "{:?}", &r.values[..3]);
    }
}

#[test]
fn periodic_rate_sums_to_zero() {
    let f = periodic_1d((0..32).map(|i| (i as f64 * 0.4).sin() + 0.3 * (i as f64 * 1.3).cos()).collect(), 6.0);
    let spec = BoundarySpec::frozen_from(&f);
    let r = semidiscrete_rhs(&f, &spec, &Rusanov(&Burgers)).unwrap();
    assert!(r.totals()[0].abs() <= 1e-13);
}

/// Cell averages of `sin(x) * amp + off` on `[0, 2 pi)`.
fn sine_averages(n: usize, amp: f64, off: f64) -> Vec<f64> {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    (0..n).map(|j| amp * ((j as f64 * h).cos() - ((j + 1) as f64 * h).cos()) / h + off).collect()
}

#[test]
fn burgers_rate_converges_at_fifth_order() {
    let mut errs = Vec::new();
    for n in [64, 128, 256] {
        let f = periodic_1d(sine_averages(n, 0.5, 1.0), 2.0 * std::f64::consts::PI);
        let h = f.h[0];
        let r = semidiscrete_rhs(&f, &BoundarySpec::frozen_from(&f), &Rusanov(&Burgers)).unwrap();
        // exact: -(F(x_{j+1}) - F(x_j)) / h with F = u^2 / 2 pointwise
        let u = |x: f64| 0.5 * x.sin() + 1.0;
        let e: f64 = (0..n)
            .map(|j| {
                let (a, b) = (j as f64 * h, (j + 1) as f64 * h);
                let exact = -(0.5 * u(b).powi(2) - 0.5 * u(a).powi(2)) / h;
                (r.values[j] - exact).abs() * h
            })
            .sum();
        errs.push(e);
    }
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 4.5, "order {order}, errors {errs:?}");
    }
}

#[test]
fn rk3_single_step_matches_stability_polynomial() {
    let z = tvdrk3_step(&[1.0], 0.1, |z| Ok(vec![-z[0]])).unwrap();
    let x: f64 = -0.1;
    let poly = 1.0 + x + x * x / 2.0 + x * x * x / 6.0;
    assert!((z[0] - poly).abs() <= 1e-15, "{} vs {poly}", z[0]);
    let same = tvdrk3_step(&[1.0, 2.0], 0.3, |z| Ok(vec![0.0; z.len()])).unwrap();
    assert_eq!(same, vec![1.0, 2.0]);
}

#[test]
fn rk3_is_third_order() {
    let solve = |dt: f64| {
        let mut z = vec![1.0];
        for _ in 0..(1.0 / dt).round() as usize {
            z = tvdrk3_step(&z, dt, |z| Ok(vec![-z[0]])).unwrap();
        }
        (z[0] - (-1.0f64).exp()).abs()
    };
    let e: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&dt| solve(dt)).collect();
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 3.0).abs() <= 0.1, "{order}");
    }
}

#[test]
fn rk3_reports_non_finite_stage() {
    let err = tvdrk3_step(&[1.0], 0.1, |_| Ok(vec![f64::NAN])).unwrap_err();
    assert_eq!(err, FvError::NonFinite { stage: 1 });
}

fn learned_model(d: usize, p: usize) -> LearnedLaw {
    LearnedLaw::new(Architecture { p, d, potential_hidden: vec![8], entropy_hidden: vec![8, 8] }, 3)
}

fn taped_rk3(model: &LearnedLaw, f: &GridField, settings: &StepSettings) -> Vec<f64> {
    let spec = BoundarySpec::frozen_from(f);
    let plan = StencilPlan::new(f, &spec).unwrap();
    let mut t = Tape::<f64>::new();
    let h = model.register(&mut t, false);
    let z0 = t.constant(&f.component_major(), f.p, f.n_cells());
    let z = learned_rk3_step(&mut t, model, &h, &plan, z0, settings, None).unwrap();
    transpose(t.value(z), f.p, f.n_cells())
}

#[test]
fn taped_step_matches_plain_step_in_1d_and_2d() {
    let settings = StepSettings { epoch: Epoch::Training(2), dt: 0.01, stabilizers: Stabilizers::default() };
    let cases = [
        (vec![12], vec![BoundaryKind::Periodic], 2),
        (vec![11], vec![BoundaryKind::Dirichlet], 3),
        (vec![9, 8], vec![BoundaryKind::Periodic, BoundaryKind::Dirichlet], 1),
    ];
    for (n, kinds, p) in cases {
        let cells: usize = n.iter().product();
        let values: Vec<f64> = (0..cells * p).map(|i| 0.5 * (i as f64 * 0.77).sin()).collect();
        let h = vec![0.1; n.len()];
        let f = GridField::from_values(p, n.clone(), h, kinds, values).unwrap();
        let model = learned_model(n.len(), p);
        let taped = taped_rk3(&model, &f, &settings);
        let spec = BoundarySpec::frozen_from(&f);
        let lf =
            LearnedFlux { model: &model, epoch: settings.epoch, dt: settings.dt, stabilizers: settings.stabilizers };
        let plain = tvdrk3_step(&f.values, settings.dt, |z| {
            Ok(semidiscrete_rhs(&f.with_values(z.to_vec()), &spec, &lf)?.values)
        })
        .unwrap();
        for (a, b) in taped.iter().zip(&plain) {
            assert!((a - b).abs() <= 1e-13 * (1.0 + b.abs()), "{n:?}: {a} vs {b}");
        }
    }
}

#[test]
fn flux_errors_carry_their_location() {
    struct Bad;
    impl NumericalFlux for Bad {
        fn state_dim(&self) -> usize {
            1
        }
        fn fluxes(&self, _: usize, _: f64, _: &[f64], _: &[f64], n: usize) -> Result<Vec<f64>, crate::flux::FluxError> {
            Err(crate::flux::FluxError::NonFinite { interface: n - 1, what: "flux" })
        }
    }
    let f = GridField::zeros(1, vec![8, 7], vec![1.0, 1.0], vec![BoundaryKind::Periodic; 2]).unwrap();
    let err = semidiscrete_rhs(&f, &BoundarySpec::frozen_from(&f), &Bad).unwrap_err();
    match err {
        FvError::Flux { axis: 0, line: 6, interface: 8, .. } => {}
        other => panic!("{other:?}"),
    }
}

proptest! {
    #[test]
    fn learned_periodic_step_conserves_totals(seed in 0u64..200, amp in 0.1f64..2.0) {
        let p = 2;
        let n = 16;
        let values: Vec<f64> = (0..n * p).map(|i| amp * ((i as f64 + seed as f64) * 0.61).sin()).collect();
        let f = GridField::from_values(p, vec![n], vec![0.2], vec![BoundaryKind::Periodic], values).unwrap();
        let model = LearnedLaw::new(Architecture { p, d: 1, potential_hidden: vec![6], entropy_hidden: vec![6] }, seed);
        let settings = StepSettings { epoch: Epoch::Evaluation, dt: 0.01, stabilizers: Stabilizers::default() };
        let next = f.with_values(taped_rk3(&model, &f, &settings));
        for (a, b) in f.totals().iter().zip(next.totals()) {
            prop_assert!((a - b).abs() <= 1e-13 * (1.0 + a.abs()));
        }
    }
}
