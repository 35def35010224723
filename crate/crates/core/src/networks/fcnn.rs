use rand::Rng;

use super::jet::{Activation, Jet};
use crate::autodiff::{Real, Tape, Var};

/// Dense layer `y = W x + b`, `W` stored row-major `out_dim x in_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub out_dim: usize,
    pub in_dim: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Dense { out_dim, in_dim, weight: vec![0.0; out_dim * in_dim], bias: vec![0.0; out_dim] }
    }

    /// Weights uniform in `+-sqrt(1/in_dim)`, zero bias.
    pub fn uniform<R: Rng + ?Sized>(out_dim: usize, in_dim: usize, rng: &mut R) -> Self {
        let a = (1.0 / in_dim as f64).sqrt();
        let weight = (0..out_dim * in_dim).map(|_| rng.random_range(-a..a)).collect();
        Dense { out_dim, in_dim, weight, bias: vec![0.0; out_dim] }
    }
}

/// Fully connected scalar-output network with tanh hidden activations.
#[derive(Clone, Debug, PartialEq)]
pub struct Fcnn {
    pub layers: Vec<Dense>,
}

#[derive(Clone, Debug)]
pub struct FcnnVars {
    pub layers: Vec<(Var, Var)>,
}

impl Fcnn {
    pub fn new<R: Rng + ?Sized>(input_dim: usize, hidden: &[usize], rng: &mut R) -> Self {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut fan_in = input_dim;
        for &h in hidden {
            layers.push(Dense::uniform(h, fan_in, rng));
            fan_in = h;
        }
        layers.push(Dense::uniform(1, fan_in, rng));
        Fcnn { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.out_dim).collect()
    }

    /// Parameter blocks in storage order: per layer, weight then bias.
    pub fn blocks(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()]).collect()
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()]).collect()
    }

    pub fn register<T: Real>(&self, t: &mut Tape<T>, trainable: bool) -> FcnnVars {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let w = t.leaf_f64(&l.weight, l.out_dim, l.in_dim, trainable);
                let b = t.leaf_f64(&l.bias, l.out_dim, 1, trainable);
                (w, b)
            })
            .collect();
        FcnnVars { layers }
    }

    /// Jet of the network output at the `p x N` input block `x`.
    pub fn jet<T: Real>(&self, t: &mut Tape<T>, vars: &FcnnVars, x: Var, order: usize) -> Jet {
        let mut z = Jet::input(t, x, order);
        let last = vars.layers.len() - 1;
        for (i, &(w, b)) in vars.layers.iter().enumerate() {
            z = z.affine(t, w, Some(b));
            if i < last {
                z = z.activate(t, Activation::Tanh);
            }
        }
        z
    }
}
