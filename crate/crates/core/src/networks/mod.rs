//! Flux potential networks (tanh MLPs) and the convex entropy network.
//!
//! Networks are evaluated as [`Jet`]s on a tape, which gives the entropy
//! variables `v = grad eta(u)`, the fluxes `f_i = grad phi_i(v)` and the
//! Hessians used for wave speeds, all differentiable in the parameters.

mod checkpoint;
pub mod eval;
mod fcnn;
mod icnn;
mod jet;
mod model;

pub use checkpoint::{decode_f64, encode_f64, load_checkpoint, save_checkpoint, CheckpointMeta, CHECKPOINT_FORMAT};
pub use fcnn::{Dense, Fcnn, FcnnVars};
pub use icnn::{Icnn, IcnnLayer, IcnnVars};
pub use jet::{Activation, Jet};
pub use model::{Architecture, LearnedLaw, LearnedLawVars};

use crate::autodiff::{Real, ScalarFn, Tape, Var};

#[derive(Debug, thiserror::Error)]
pub enum NetworkError {
    #[error("expected {expected} parameters, found {found}")]
    ParamCount { expected: usize, found: usize },
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// An entropy function and one flux potential per spatial axis, exposed as
/// tape jets. The physical flux along axis `i` is `grad phi_i(grad eta(u))`.
pub trait LawModel {
    type Handles;

    fn state_dim(&self) -> usize;
    fn space_dim(&self) -> usize;

    /// Puts the model parameters on the tape.
    fn register<T: Real>(&self, t: &mut Tape<T>, trainable: bool) -> Self::Handles;

    /// Jet of `eta` at the `p x N` block `u`.
    fn entropy_jet<T: Real>(&self, t: &mut Tape<T>, h: &Self::Handles, u: Var, order: usize) -> Jet;

    /// Jet of `phi_axis` at the `p x N` block `v`.
    fn potential_jet<T: Real>(&self, t: &mut Tape<T>, h: &Self::Handles, axis: usize, v: Var, order: usize) -> Jet;
}

impl ScalarFn for Fcnn {
    fn build<T: Real>(&self, t: &mut Tape<T>, x: Var) -> Var {
        let vars = self.register(t, false);
        self.jet(t, &vars, x, 0).value
    }
}

impl ScalarFn for Icnn {
    fn build<T: Real>(&self, t: &mut Tape<T>, x: Var) -> Var {
        let vars = self.register(t, false);
        self.jet(t, &vars, x, 0).value
    }
}

#[cfg(test)]
mod tests;
