//! Finite-volume discretization: ghost cells, WENO5 reconstruction, the
//! flux-difference residual and TVDRK3 time stepping, in 1-D and 2-D.

mod grid;
mod rhs;
mod rk;
mod taped;
mod weno;

pub use grid::{
    fill_ghosts, transpose, AxisBoundary, BoundaryKind, BoundarySpec, GridField, PaddedField, Source, GHOST_WIDTH,
    MIN_CELLS,
};
pub use rhs::{reconstruct_interfaces, semidiscrete_rhs, KnownFlux, LearnedFlux, NumericalFlux, Rusanov};
pub use rk::tvdrk3_step;
pub use taped::{learned_rate, learned_rk3_step, StencilPlan, StepSettings, WaveSpeedLog};
pub use weno::{weno5_reconstruct, weno5_tape};

use crate::flux::FluxError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FvError {
    #[error("grid line has {0} cells; WENO5 needs at least 7")]
    TooFewCells(usize),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("flux failure on axis {axis}, line {line}, interface {interface}: {source}")]
    Flux { axis: usize, line: usize, interface: usize, source: FluxError },
    #[error("non-finite state after RK stage {stage}")]
    NonFinite { stage: usize },
}

impl FvError {
    /// Locates a flux error given the number of interfaces per line.
    pub fn flux(axis: usize, per_line: usize, source: FluxError) -> Self {
        let i = source.interface();
        FvError::Flux { axis, line: i / per_line, interface: i % per_line, source }
    }
}

#[cfg(test)]
mod tests;
