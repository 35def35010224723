use super::BenchmarkError;
use crate::fv::{semidiscrete_rhs, tvdrk3_step, BoundarySpec, GridField, KnownFlux, Rusanov};

/// Largest `sum_axes s_max dt / h` over the cells of `field`.
pub fn cfl_number<L: KnownFlux + ?Sized>(law: &L, field: &GridField, dt: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for c in 0..field.n_cells() {
        let u = field.cell(c);
        let s: f64 = (0..field.d()).map(|axis| law.max_speed(axis, u) * dt / field.h[axis]).sum();
        if s.is_nan() {
            return s;
        }
        worst = worst.max(s);
    }
    worst
}

/// WENO5 + Rusanov + TVDRK3 solve of a known law. Dirichlet ghosts are frozen
/// from `ic`. Returns `steps + 1` fields, starting with `ic`.
pub fn reference_solve<L: KnownFlux + ?Sized>(
    law: &L,
    ic: &GridField,
    dt: f64,
    steps: usize,
) -> Result<Vec<GridField>, BenchmarkError> {
    let spec = BoundarySpec::frozen_from(ic);
    let flux = Rusanov(law);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(ic.clone());
    for step in 0..steps {
        let cur = out.last().expect("nonempty");
        let cfl = cfl_number(law, cur, dt);
        if !(cfl <= 1.0) {
            return Err(BenchmarkError::Cfl { step, cfl });
        }
        let next =
            tvdrk3_step(&cur.values, dt, |z| Ok(semidiscrete_rhs(&cur.with_values(z.to_vec()), &spec, &flux)?.values))
                .map_err(|source| BenchmarkError::Solver { step, source })?;
        out.push(cur.with_values(next));
    }
    Ok(out)
}
