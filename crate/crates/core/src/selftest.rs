//! Invariant checks that need no training: entropy conservation of the
//! two-point flux, hyperbolicity, structural conservation, scheme orders,
//! gradient correctness and the stabilizers. `conslaw selftest` runs them
//! all; the acceptance tests call them one by one.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::flux::{entropy_conservative_flux, jacobi_eigen, psd_sqrt, wave_speed, Epoch, FluxContext, Stabilizers};
use crate::fv::{
    semidiscrete_rhs, tvdrk3_step, BoundaryKind, BoundarySpec, GridField, KnownFlux, Rusanov, StepSettings,
    WaveSpeedLog,
};
use crate::linalg::{dot, SymMatrix};
use crate::metrics::conservation_remainder;
use crate::networks::eval::{entropy_hessian, entropy_variables, evaluate_states, potential_hessian};
use crate::networks::{Architecture, LearnedLaw};
use crate::training::{loss_and_gradient, rollout, window_terms, Window};

/// Outcome of one check.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {} ({:.1} s): {}", self.name, self.seconds, self.detail)
    }
}

fn timed(name: &'static str, body: impl FnOnce() -> (bool, String)) -> Check {
    let start = Instant::now();
    let (passed, detail) = body();
    Check { name, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

/// Fresh initialization plus a parameter kick, so the ICNN part of the
/// entropy carries real curvature rather than just the quadratic term.
fn small_law(p: usize, d: usize, seed: u64) -> LearnedLaw {
    let m = LearnedLaw::new(Architecture { p, d, potential_hidden: vec![8], entropy_hidden: vec![8, 8] }, seed);
    perturbed(m, 0.5)
}

fn uniform(rng: &mut ChaCha8Rng, p: usize, r: f64) -> Vec<f64> {
    (0..p).map(|_| rng.random_range(-r..r)).collect()
}

/// `[[v]] . f* = [[phi]]` for random networks and state pairs, `p` cycling
/// through 1, 2, 3.
pub fn entropy_conservation(instances: usize, seed: u64) -> Check {
    timed("entropy-conservative flux identity", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for i in 0..instances {
            let p = 1 + i % 3;
            let m = small_law(p, 1, seed.wrapping_add(i as u64));
            let (um, up) = (uniform(&mut rng, p, 2.0), uniform(&mut rng, p, 2.0));
            let ctx = FluxContext::from_model(&m, 0, &um, &up, Epoch::Evaluation, 0.05, 0.005, Stabilizers::default());
            let fstar = entropy_conservative_flux(
                &ctx,
                |u| evaluate_states(&m, u, 1).flux.swap_remove(0),
                |u| evaluate_states(&m, u, 1).potential[0][0],
            );
            let jphi = evaluate_states(&m, &up, 1).potential[0][0] - evaluate_states(&m, &um, 1).potential[0][0];
            let r = (dot(&ctx.jump_v(), &fstar) - jphi).abs() / (1.0 + jphi.abs());
            worst = worst.max(r);
        }
        (worst <= 1e-12, format!("{instances} instances, worst scaled residual {worst:.2e} (limit 1e-12)"))
    })
}

/// Spectral radius of `AB` by power iteration on `(AB)^2`, with the
/// Rayleigh quotient in the `B` inner product where `AB` is self-adjoint.
pub fn power_spectral_radius(a: &SymMatrix, b: &SymMatrix) -> f64 {
    let p = a.dim();
    let apply = |x: &[f64]| a.mul_vec(&b.mul_vec(x));
    let bnorm = |x: &[f64]| dot(x, &b.mul_vec(x));
    let mut x: Vec<f64> = (0..p).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut est = 0.0;
    for _ in 0..20_000 {
        let y = apply(&apply(&x));
        let (num, den) = (dot(&y, &b.mul_vec(&x)), bnorm(&x));
        if den == 0.0 {
            return 0.0;
        }
        let next = (num / den).max(0.0).sqrt();
        let scale = bnorm(&y).sqrt();
        if scale == 0.0 {
            return 0.0;
        }
        x = y.iter().map(|v| v / scale).collect();
        if (next - est).abs() <= 1e-15 * next {
            return next;
        }
        est = next;
    }
    est
}

/// Convex entropy (PSD Hessian) and real characteristic speeds whose
/// largest magnitude matches a power-iteration estimate of `rho(AB)`.
pub fn hyperbolicity(instances: usize, seed: u64) -> Check {
    timed("hyperbolicity by construction", || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut min_eig, mut worst_rel) = (f64::INFINITY, 0.0f64);
        for i in 0..instances {
            let p = 1 + i % 3;
            let m = small_law(p, 1, seed.wrapping_add(i as u64));
            let u = uniform(&mut rng, p, 2.0);
            let b = entropy_hessian(&m, &u);
            min_eig = jacobi_eigen(&b).values.iter().copied().fold(min_eig, f64::min);
            let a = potential_hessian(&m, 0, &entropy_variables(&m, &u));
            let s = psd_sqrt(&b);
            let sym = s.matmul(&a).matmul(&s).symmetrized();
            let rho = jacobi_eigen(&sym).values.iter().fold(0.0f64, |r, l| r.max(l.abs()));
            let power = power_spectral_radius(&a, &b);
            let rel = (rho - power).abs() / rho.abs().max(power.abs()).max(1e-300);
            worst_rel = worst_rel.max(rel);
            // the kernel's own speed must be the same number
            worst_rel = worst_rel.max((wave_speed(&a, &b) - rho).abs() / rho.max(1e-300));
        }
        let ok = min_eig >= -1e-10 && worst_rel <= 1e-6;
        (
            ok,
            format!(
                "{instances} instances, min Hessian eigenvalue {min_eig:.3e}, worst speed rel. err {worst_rel:.2e}"
            ),
        )
    })
}

/// Untrained model on a periodic grid: the conservation remainder stays at
/// roundoff for every step.
pub fn structural_conservation(n: usize, steps: usize, seed: u64) -> Check {
    timed("structural conservation", || {
        let m = LearnedLaw::new(Architecture::default_for(1, 1), seed);
        let h = 2.0 * PI / n as f64;
        let values = (0..n).map(|j| 0.5 + ((j as f64 + 0.5) * h).sin()).collect();
        let u0 = GridField::from_values(1, vec![n], vec![h], vec![BoundaryKind::Periodic], values).expect("valid grid");
        let dt = 0.01;
        let settings = StepSettings { epoch: Epoch::Evaluation, dt, stabilizers: Stabilizers::default() };
        let traj = match rollout(&m, &u0, steps, &settings) {
            Ok(t) => t,
            Err(e) => return (false, format!("rollout failed: {e}")),
        };
        let worst = match conservation_remainder(&m, &traj, dt) {
            Ok(r) => r[0].iter().copied().fold(0.0, f64::max),
            Err(e) => return (false, e.to_string()),
        };
        (worst <= 1e-12, format!("n={n}, {steps} steps, max remainder {worst:.2e} (limit 1e-12)"))
    })
}

struct Advection;

impl KnownFlux for Advection {
    fn state_dim(&self) -> usize {
        1
    }
    fn flux(&self, _axis: usize, u: &[f64], out: &mut [f64]) {
        out[0] = u[0];
    }
    fn max_speed(&self, _axis: usize, _u: &[f64]) -> f64 {
        1.0
    }
}

/// Spatial order of WENO5 on linear advection and the temporal order of
/// TVDRK3 on `z' = -z`. Returns both observed rates.
pub fn scheme_orders() -> (Vec<f64>, Vec<f64>) {
    // cell averages of 1 + sin(x) + 0.5 cos(2x) and the exact operator
    // -(u(x_{j+1/2}) - u(x_{j-1/2})) / h
    let u = |x: f64| 1.0 + x.sin() + 0.5 * (2.0 * x).cos();
    let prim = |x: f64| x - x.cos() + 0.25 * (2.0 * x).sin();
    let errors: Vec<f64> = [64usize, 128, 256]
        .iter()
        .map(|&n| {
            let h = 2.0 * PI / n as f64;
            let avg = (0..n).map(|j| (prim((j + 1) as f64 * h) - prim(j as f64 * h)) / h).collect();
            let f = GridField::from_values(1, vec![n], vec![h], vec![BoundaryKind::Periodic], avg).expect("valid grid");
            let r = semidiscrete_rhs(&f, &BoundarySpec::frozen_from(&f), &Rusanov(&Advection)).expect("finite rate");
            (0..n).map(|j| (r.values[j] + (u((j + 1) as f64 * h) - u(j as f64 * h)) / h).abs() * h).sum()
        })
        .collect();
    let spatial = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let decay = |dt: f64| {
        let mut z = vec![1.0];
        for _ in 0..(1.0 / dt).round() as usize {
            z = tvdrk3_step(&z, dt, |z| Ok(vec![-z[0]])).expect("finite");
        }
        (z[0] - (-1.0f64).exp()).abs()
    };
    let e: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&dt| decay(dt)).collect();
    let temporal = e.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    (spatial, temporal)
}

pub fn scheme_order_check() -> Check {
    timed("WENO5 / TVDRK3 orders", || {
        let (s, t) = scheme_orders();
        let ok = s.iter().all(|&o| o >= 4.5) && t.iter().all(|&o| (o - 3.0).abs() <= 0.1);
        (ok, format!("spatial {s:.3?} (need >= 4.5), temporal {t:.3?} (need 3 +- 0.1)"))
    })
}

/// Adds `size * sin(1.7 i)` to parameter `i` and re-projects, which moves
/// every weight away from special values such as the huber kink.
pub fn perturbed(mut model: LearnedLaw, size: f64) -> LearnedLaw {
    let flat: Vec<f64> = model.flatten().iter().enumerate().map(|(i, v)| v + size * (i as f64 * 1.7).sin()).collect();
    model.load_flat(&flat).expect("same length");
    model.project();
    model
}

/// Recurrent-loss gradient against fourth-order central differences on a
/// 16-cell, one-step scalar problem with one hidden layer of width 8.
/// Differences are taken with the recorded wave speeds held fixed, which
/// is the derivative the gradient defines.
pub fn gradient_check(seed: u64) -> Check {
    timed("recurrent-loss gradient", || {
        let arch = Architecture { p: 1, d: 1, potential_hidden: vec![8], entropy_hidden: vec![8] };
        let model = perturbed(LearnedLaw::new(arch, seed), 0.1);
        let settings = StepSettings { epoch: Epoch::Training(2), dt: 0.03, stabilizers: Stabilizers::default() };
        let n = 16;
        let h = 2.0 * PI / n as f64;
        // rough data keeps every interface jump O(0.1); near-equal states
        // make the two-point flux lose digits to cancellation, which would
        // swamp the difference quotients of the small gradient entries
        let grid = |f: &dyn Fn(f64) -> f64| {
            let values = (0..n).map(|j| f(j as f64)).collect();
            GridField::from_values(1, vec![n], vec![h], vec![BoundaryKind::Periodic], values).expect("valid grid")
        };
        let frames = [
            grid(&|j| 1.0 + 0.4 * (2.3 * j + 0.7 * j * j).sin()),
            grid(&|j| 1.0 + 0.4 * (2.3 * j + 0.7 * j * j).sin() + 0.05 * (1.1 * j).cos()),
        ];
        let w = Window::new(&frames);
        let grad = match loss_and_gradient(&model, &[&w], &settings) {
            Ok((_, g)) => g,
            Err(e) => return (false, e.to_string()),
        };
        let mut log = WaveSpeedLog::recording();
        if let Err(e) = window_terms(&model, &w, &settings, Some(&mut log)) {
            return (false, e.to_string());
        }
        let entries = log.into_entries();
        let flat = model.flatten();
        let loss_at = |theta: &[f64]| {
            let mut m = model.clone();
            m.load_flat(theta).expect("same length");
            let mut replay = WaveSpeedLog::replaying(entries.clone());
            let t = window_terms(&m, &w, &settings, Some(&mut replay)).expect("finite rollout");
            t.mismatch / t.magnitude
        };
        let step = 1e-3;
        let (mut worst, mut checked) = (0.0f64, 0);
        for i in 0..flat.len() {
            let at = |k: f64| {
                let mut th = flat.clone();
                th[i] += k * step;
                loss_at(&th)
            };
            let fd = (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * step);
            let scale = grad[i].abs().max(fd.abs());
            if scale <= 1e-12 {
                // output offsets cannot reach the loss; both sides are zero
                continue;
            }
            checked += 1;
            worst = worst.max((fd - grad[i]).abs() / scale);
        }
        let detail = format!("{checked} of {} parameters compared, max rel. err {worst:.2e} (limit 1e-5)", flat.len());
        (worst <= 1e-5, detail)
    })
}

/// Hessian shift, wave-speed clip and jump fallback reproduce their
/// defining constants exactly.
pub fn stabilizer_check() -> Check {
    timed("stabilizers", || {
        let s = Stabilizers::default();
        let b = SymMatrix::from_rows(&[&[2.0, 0.3, -0.1], &[0.3, 1.5, 0.2], &[-0.1, 0.2, 0.7]]);
        let shift_is = |epoch: u32, c: f64| {
            let r = s.regularize_hessian(&b, Epoch::Training(epoch));
            (0..3).all(|i| (0..3).all(|j| r.get(i, j) == b.get(i, j) + if i == j { c } else { 0.0 }))
        };
        let shifts = shift_is(1, 1.0) && shift_is(3, 0.01) && s.regularize_hessian(&b, Epoch::Evaluation) == b;
        let (dx, dt) = (0.037, 0.0023);
        let clip = s.clip_wave_speed(1e6, dx, dt) == dx / dt && s.clip_wave_speed(1.25, dx, dt) == 1.25;
        // B = 0.25 I gives w = 4 [[v]]; the threshold is |w| = 2 |[[u]]|
        let quarter = SymMatrix::identity(2).add_diagonal(-0.75);
        let ju = [0.5, -1.0];
        let at = s.stabilized_jump_solve(&quarter, &[0.5, 0.1], &ju, 0).expect("solvable");
        let above = s.stabilized_jump_solve(&quarter, &[0.5 + 1e-12, 0.1], &ju, 0).expect("solvable");
        let fallback = at == (vec![2.0, 0.4], true) && above == (ju.to_vec(), false);
        let ok = shifts && clip && fallback;
        (ok, format!("shift {shifts}, clip {clip}, fallback {fallback}"))
    })
}

/// Every check at its acceptance size.
pub fn run_all() -> Vec<Check> {
    vec![
        entropy_conservation(10_000, 1),
        hyperbolicity(1_000, 2),
        structural_conservation(128, 200, 3),
        scheme_order_check(),
        gradient_check(4),
        stabilizer_check(),
    ]
}
