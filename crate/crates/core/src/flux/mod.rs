//! Entropy-conservative and entropy-stable numerical fluxes for a learned
//! (or analytic) entropy/potential pair.
//!
//! Two implementations share the same stabilizers:
//! [`pointwise`] works one interface at a time on plain values, and
//! [`batched`] records all interfaces of a grid line on a tape so the flux
//! can be differentiated in the model parameters.

pub mod analytic;
pub mod batched;
mod eigen;
pub mod pointwise;

pub use batched::{entropy_stable_fluxes, FluxSettings, InterfaceFluxes};
pub use eigen::{jacobi_eigen, psd_sqrt, wave_speed, SmallSymmetricEig, JACOBI_MAX_SWEEPS, JACOBI_TOLERANCE};
pub use pointwise::{entropy_conservative_flux, entropy_stable_flux, FluxContext};

#[cfg(test)]
mod tests;

use serde::{Deserialize, Serialize};

use crate::linalg::{norm_inf, SymMatrix};

/// Relative threshold below which an entropy-variable jump counts as zero.
pub const DEGENERATE_JUMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FluxError {
    #[error("entropy Hessian is singular at interface {interface}")]
    SingularHessian { interface: usize },
    #[error("non-finite {what} at interface {interface}")]
    NonFinite { interface: usize, what: &'static str },
}

impl FluxError {
    pub fn interface(&self) -> usize {
        match self {
            FluxError::SingularHessian { interface } | FluxError::NonFinite { interface, .. } => *interface,
        }
    }
}

/// Training epoch (1-based) or evaluation, which controls the Hessian shift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Epoch {
    Training(u32),
    Evaluation,
}

/// Constants of the three stabilizers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stabilizers {
    /// Base of the decaying Hessian shift `base^(epoch-1) I`.
    pub shift_base: f64,
    /// Fall back to `[[u]]` when `|B^-1 [[v]]|_inf > jump_ratio |[[u]]|_inf`.
    pub jump_ratio: f64,
    /// Wave speed is capped at `cfl * dx / dt`.
    pub cfl: f64,
}

impl Default for Stabilizers {
    fn default() -> Self {
        Stabilizers { shift_base: 0.1, jump_ratio: 2.0, cfl: 1.0 }
    }
}

impl Stabilizers {
    /// `shift_base^(epoch - 1)`, or zero in evaluation.
    pub fn hessian_shift(&self, epoch: Epoch) -> f64 {
        match epoch {
            Epoch::Evaluation => 0.0,
            // written as a power of the reciprocal so 0.1^2 comes out as 0.01
            Epoch::Training(e) => (1.0 / self.shift_base).powi(-(e.max(1) as i32 - 1)),
        }
    }

    pub fn regularize_hessian(&self, b: &SymMatrix, epoch: Epoch) -> SymMatrix {
        let shift = self.hessian_shift(epoch);
        if shift == 0.0 {
            b.clone()
        } else {
            b.add_diagonal(shift)
        }
    }

    /// Whether the solved direction `w` is accepted over the raw jump.
    pub fn accepts(&self, w: &[f64], jump_u: &[f64]) -> bool {
        norm_inf(w) <= self.jump_ratio * norm_inf(jump_u)
    }

    /// Solves `B w = [[v]]`, falling back to `[[u]]` when the solution is
    /// too large. Returns the direction and whether it was accepted.
    pub fn stabilized_jump_solve(
        &self,
        b_reg: &SymMatrix,
        jump_v: &[f64],
        jump_u: &[f64],
        interface: usize,
    ) -> Result<(Vec<f64>, bool), FluxError> {
        let w = b_reg.solve(jump_v).ok_or(FluxError::SingularHessian { interface })?;
        if self.accepts(&w, jump_u) {
            Ok((w, true))
        } else {
            Ok((jump_u.to_vec(), false))
        }
    }

    pub fn clip_wave_speed(&self, lambda: f64, dx: f64, dt: f64) -> f64 {
        lambda.min(self.cfl * dx / dt)
    }
}
