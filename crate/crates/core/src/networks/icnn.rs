use rand::Rng;

use super::fcnn::Dense;
use super::jet::{Activation, Jet};
use crate::autodiff::{Real, Tape, Var};

/// One hidden layer `z' = softplus(Wz z + Wx x + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct IcnnLayer {
    /// `out_dim x z_dim`, kept elementwise non-negative.
    pub wz: Vec<f64>,
    /// `out_dim x input_dim`, unconstrained skip connection.
    pub wx: Vec<f64>,
    pub bias: Vec<f64>,
    pub out_dim: usize,
    pub z_dim: usize,
}

/// Input-convex network
/// `eta(x) = W z_L + b + huber(w_s) . x^2 + w_l . x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Icnn {
    pub input_dim: usize,
    pub hidden: Vec<IcnnLayer>,
    /// Output weights (non-negative).
    pub out_weight: Vec<f64>,
    pub out_bias: f64,
    pub quad_weight: Vec<f64>,
    pub lin_weight: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct IcnnVars {
    pub hidden: Vec<(Var, Var, Var)>,
    pub out_weight: Var,
    pub out_bias: Var,
    pub quad_weight: Var,
    pub lin_weight: Var,
}

impl Icnn {
    /// Random hidden weights, `w_s = 1`, `w_l = 0`, already projected.
    pub fn new<R: Rng + ?Sized>(input_dim: usize, hidden: &[usize], rng: &mut R) -> Self {
        let mut layers = Vec::with_capacity(hidden.len());
        let mut z_dim = input_dim;
        for &h in hidden {
            let wz = Dense::uniform(h, z_dim, rng).weight;
            let wx = Dense::uniform(h, input_dim, rng).weight;
            layers.push(IcnnLayer { wz, wx, bias: vec![0.0; h], out_dim: h, z_dim });
            z_dim = h;
        }
        let out_weight = Dense::uniform(1, z_dim, rng).weight;
        let mut net = Icnn {
            input_dim,
            hidden: layers,
            out_weight,
            out_bias: 0.0,
            quad_weight: vec![1.0; input_dim],
            lin_weight: vec![0.0; input_dim],
        };
        net.project();
        net
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.hidden.iter().map(|l| l.out_dim).collect()
    }

    /// Clamps every weight that multiplies a hidden state to `>= 0`.
    pub fn project(&mut self) {
        for l in &mut self.hidden {
            l.wz.iter_mut().for_each(|w| *w = w.max(0.0));
        }
        self.out_weight.iter_mut().for_each(|w| *w = w.max(0.0));
    }

    pub fn is_projected(&self) -> bool {
        self.hidden.iter().all(|l| l.wz.iter().all(|&w| w >= 0.0)) && self.out_weight.iter().all(|&w| w >= 0.0)
    }

    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.hidden {
            out.extend([l.wz.as_slice(), l.wx.as_slice(), l.bias.as_slice()]);
        }
        out.extend([
            self.out_weight.as_slice(),
            std::slice::from_ref(&self.out_bias),
            self.quad_weight.as_slice(),
            self.lin_weight.as_slice(),
        ]);
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.hidden {
            out.extend([l.wz.as_mut_slice(), l.wx.as_mut_slice(), l.bias.as_mut_slice()]);
        }
        out.extend([
            self.out_weight.as_mut_slice(),
            std::slice::from_mut(&mut self.out_bias),
            self.quad_weight.as_mut_slice(),
            self.lin_weight.as_mut_slice(),
        ]);
        out
    }

    pub fn register<T: Real>(&self, t: &mut Tape<T>, trainable: bool) -> IcnnVars {
        let p = self.input_dim;
        let hidden = self
            .hidden
            .iter()
            .map(|l| {
                let wz = t.leaf_f64(&l.wz, l.out_dim, l.z_dim, trainable);
                let wx = t.leaf_f64(&l.wx, l.out_dim, p, trainable);
                let b = t.leaf_f64(&l.bias, l.out_dim, 1, trainable);
                (wz, wx, b)
            })
            .collect();
        IcnnVars {
            hidden,
            out_weight: t.leaf_f64(&self.out_weight, 1, self.out_weight.len(), trainable),
            out_bias: t.leaf_f64(&[self.out_bias], 1, 1, trainable),
            quad_weight: t.leaf_f64(&self.quad_weight, 1, p, trainable),
            lin_weight: t.leaf_f64(&self.lin_weight, 1, p, trainable),
        }
    }

    pub fn jet<T: Real>(&self, t: &mut Tape<T>, vars: &IcnnVars, x: Var, order: usize) -> Jet {
        let xj = Jet::input(t, x, order);
        let mut z = xj.clone();
        for &(wz, wx, b) in &vars.hidden {
            let from_z = z.affine(t, wz, None);
            let from_x = xj.affine(t, wx, Some(b));
            z = from_z.add(t, &from_x).activate(t, Activation::Softplus);
        }
        let out = z.affine(t, vars.out_weight, Some(vars.out_bias));
        let hq = t.huber(vars.quad_weight);
        let quad = xj.square(t).affine(t, hq, None);
        let lin = xj.affine(t, vars.lin_weight, None);
        out.add(t, &quad).add(t, &lin)
    }
}
