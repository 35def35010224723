use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fcnn::{Fcnn, FcnnVars};
use super::icnn::{Icnn, IcnnVars};
use super::jet::Jet;
use super::{LawModel, NetworkError};
use crate::autodiff::{Real, Tape, Var};

/// Layer widths of a learned law.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    /// State dimension.
    pub p: usize,
    /// Spatial dimension (one flux potential per axis).
    pub d: usize,
    pub potential_hidden: Vec<usize>,
    pub entropy_hidden: Vec<usize>,
}

impl Architecture {
    /// One hidden layer of 32 for the potentials and two of 32 for the
    /// entropy on scalar laws; three of 64 and two of 64 on systems.
    pub fn default_for(p: usize, d: usize) -> Self {
        if p == 1 {
            Architecture { p, d, potential_hidden: vec![32], entropy_hidden: vec![32, 32] }
        } else {
            Architecture { p, d, potential_hidden: vec![64, 64, 64], entropy_hidden: vec![64, 64] }
        }
    }
}

/// Convex entropy network plus one flux potential network per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnedLaw {
    pub arch: Architecture,
    pub potentials: Vec<Fcnn>,
    pub entropy: Icnn,
}

#[derive(Clone, Debug)]
pub struct LearnedLawVars {
    pub potentials: Vec<FcnnVars>,
    pub entropy: IcnnVars,
}

impl LearnedLaw {
    pub fn new(arch: Architecture, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let potentials = (0..arch.d).map(|_| Fcnn::new(arch.p, &arch.potential_hidden, &mut rng)).collect();
        let entropy = Icnn::new(arch.p, &arch.entropy_hidden, &mut rng);
        LearnedLaw { arch, potentials, entropy }
    }

    /// Parameter blocks in checkpoint order: potentials by axis, then the
    /// entropy network.
    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.potentials.iter().flat_map(|f| f.blocks()).collect();
        out.extend(self.entropy.blocks());
        out
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self.potentials.iter_mut().flat_map(|f| f.blocks_mut()).collect();
        out.extend(self.entropy.blocks_mut());
        out
    }

    pub fn n_params(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.blocks().concat()
    }

    pub fn load_flat(&mut self, flat: &[f64]) -> Result<(), NetworkError> {
        let expected = self.n_params();
        if flat.len() != expected {
            return Err(NetworkError::ParamCount { expected, found: flat.len() });
        }
        let mut pos = 0;
        for block in self.blocks_mut() {
            block.copy_from_slice(&flat[pos..pos + block.len()]);
            pos += block.len();
        }
        Ok(())
    }

    pub fn project(&mut self) {
        self.entropy.project();
    }

    /// Tape leaves in checkpoint order.
    pub fn param_vars(vars: &LearnedLawVars) -> Vec<Var> {
        let mut out = Vec::new();
        for f in &vars.potentials {
            for &(w, b) in &f.layers {
                out.extend([w, b]);
            }
        }
        let e = &vars.entropy;
        for &(wz, wx, b) in &e.hidden {
            out.extend([wz, wx, b]);
        }
        out.extend([e.out_weight, e.out_bias, e.quad_weight, e.lin_weight]);
        out
    }

    /// Adds the adjoints of all parameter leaves, in checkpoint order, to
    /// `grad`.
    pub fn accumulate_gradient(tape: &Tape<f64>, vars: &LearnedLawVars, grad: &mut [f64]) {
        let mut pos = 0;
        for v in Self::param_vars(vars) {
            let a = tape.adjoint(v);
            for (g, &x) in grad[pos..pos + a.len()].iter_mut().zip(a) {
                *g += x;
            }
            pos += a.len();
        }
        debug_assert_eq!(pos, grad.len());
    }
}

impl LawModel for LearnedLaw {
    type Handles = LearnedLawVars;

    fn state_dim(&self) -> usize {
        self.arch.p
    }

    fn space_dim(&self) -> usize {
        self.arch.d
    }

    fn register<T: Real>(&self, t: &mut Tape<T>, trainable: bool) -> LearnedLawVars {
        LearnedLawVars {
            potentials: self.potentials.iter().map(|f| f.register(t, trainable)).collect(),
            entropy: self.entropy.register(t, trainable),
        }
    }

    fn entropy_jet<T: Real>(&self, t: &mut Tape<T>, h: &LearnedLawVars, u: Var, order: usize) -> Jet {
        self.entropy.jet(t, &h.entropy, u, order)
    }

    fn potential_jet<T: Real>(&self, t: &mut Tape<T>, h: &LearnedLawVars, axis: usize, v: Var, order: usize) -> Jet {
        self.potentials[axis].jet(t, &h.potentials[axis], v, order)
    }
}
