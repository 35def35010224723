//! Second-order forward jets recorded on a tape.
//!
//! A [`Jet`] carries a batched value together with its first and second
//! derivatives with respect to the network input. Every component is an
//! ordinary tape node, so parameter gradients flow through input
//! derivatives for free. Components that are identically zero are `None`.

use crate::autodiff::{Real, Tape, Var};

#[derive(Clone, Debug)]
pub struct Jet {
    pub value: Var,
    /// `d1[k]` is the derivative along input coordinate `k`.
    pub d1: Vec<Option<Var>>,
    /// Row-major `p x p`, symmetric entries share a node.
    pub d2: Vec<Option<Var>>,
    pub order: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Softplus,
}

fn opt_add<T: Real>(t: &mut Tape<T>, a: Option<Var>, b: Option<Var>) -> Option<Var> {
    match (a, b) {
        (Some(a), Some(b)) => Some(t.add(a, b)),
        (a, None) => a,
        (None, b) => b,
    }
}

impl Jet {
    pub fn dim(&self) -> usize {
        self.d1.len()
    }

    /// Identity jet of a `p x N` input block.
    pub fn input<T: Real>(t: &mut Tape<T>, x: Var, order: usize) -> Jet {
        let s = t.shape(x);
        let p = s.rows;
        let mut d1 = vec![None; p];
        if order >= 1 {
            for (k, slot) in d1.iter_mut().enumerate() {
                let mut e = vec![0.0; s.len()];
                e[k * s.cols..(k + 1) * s.cols].iter_mut().for_each(|v| *v = 1.0);
                *slot = Some(t.leaf_f64(&e, p, s.cols, false));
            }
        }
        Jet { value: x, d1, d2: vec![None; p * p], order }
    }

    fn pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let p = self.dim();
        (0..p).flat_map(move |k| (k..p).map(move |l| (k, l)))
    }

    fn map_linear<T: Real>(&self, t: &mut Tape<T>, value: Var, mut f: impl FnMut(&mut Tape<T>, Var) -> Var) -> Jet {
        let d1 = self.d1.iter().map(|d| d.map(|d| f(t, d))).collect();
        let mut d2 = vec![None; self.d2.len()];
        let p = self.dim();
        for (k, l) in self.pairs() {
            if let Some(h) = self.d2[k * p + l] {
                let v = Some(f(t, h));
                d2[k * p + l] = v;
                d2[l * p + k] = v;
            }
        }
        Jet { value, d1, d2, order: self.order }
    }

    /// `W z + b` with `W` an `m x r` node and `b` an optional `m x 1` node.
    pub fn affine<T: Real>(&self, t: &mut Tape<T>, w: Var, b: Option<Var>) -> Jet {
        let wz = t.matmul(w, self.value);
        let value = match b {
            Some(b) => t.add_bias(wz, b),
            None => wz,
        };
        self.map_linear(t, value, |t, d| t.matmul(w, d))
    }

    pub fn add<T: Real>(&self, t: &mut Tape<T>, other: &Jet) -> Jet {
        let value = t.add(self.value, other.value);
        let d1 = self.d1.iter().zip(&other.d1).map(|(&a, &b)| opt_add(t, a, b)).collect();
        let p = self.dim();
        let mut d2 = vec![None; p * p];
        for (k, l) in self.pairs() {
            let v = opt_add(t, self.d2[k * p + l], other.d2[k * p + l]);
            d2[k * p + l] = v;
            d2[l * p + k] = v;
        }
        Jet { value, d1, d2, order: self.order.min(other.order) }
    }

    /// Elementwise `y = g(a)` given `g'(a)` and `g''(a)` nodes.
    fn compose<T: Real>(&self, t: &mut Tape<T>, value: Var, g1: Var, g2: Option<Var>) -> Jet {
        let d1: Vec<Option<Var>> = self.d1.iter().map(|d| d.map(|d| t.mul(g1, d))).collect();
        let p = self.dim();
        let mut d2 = vec![None; p * p];
        if self.order >= 2 {
            for (k, l) in self.pairs() {
                let outer = match (g2, self.d1[k], self.d1[l]) {
                    (Some(g2), Some(a), Some(b)) => {
                        let ab = t.mul(a, b);
                        Some(t.mul(g2, ab))
                    }
                    _ => None,
                };
                let inner = self.d2[k * p + l].map(|h| t.mul(g1, h));
                let v = opt_add(t, outer, inner);
                d2[k * p + l] = v;
                d2[l * p + k] = v;
            }
        }
        Jet { value, d1, d2, order: self.order }
    }

    pub fn activate<T: Real>(&self, t: &mut Tape<T>, act: Activation) -> Jet {
        let a = self.value;
        match act {
            Activation::Tanh => {
                let y = t.tanh(a);
                if self.order == 0 {
                    return Jet { value: y, d1: self.d1.clone(), d2: self.d2.clone(), order: 0 };
                }
                // tanh' = 1 - y^2, tanh'' = -2 y tanh'
                let y2 = t.square(y);
                let neg = t.scale(y2, -1.0);
                let g1 = t.offset(neg, 1.0);
                let g2 = (self.order >= 2).then(|| {
                    let yg = t.mul(y, g1);
                    t.scale(yg, -2.0)
                });
                self.compose(t, y, g1, g2)
            }
            Activation::Softplus => {
                let y = t.softplus(a);
                if self.order == 0 {
                    return Jet { value: y, d1: self.d1.clone(), d2: self.d2.clone(), order: 0 };
                }
                // softplus' = s, softplus'' = s (1 - s) with s the sigmoid
                let s = t.sigmoid(a);
                let g2 = (self.order >= 2).then(|| {
                    let neg = t.scale(s, -1.0);
                    let one_minus = t.offset(neg, 1.0);
                    t.mul(s, one_minus)
                });
                self.compose(t, y, s, g2)
            }
        }
    }

    /// Elementwise square.
    pub fn square<T: Real>(&self, t: &mut Tape<T>) -> Jet {
        let y = t.square(self.value);
        if self.order == 0 {
            return Jet { value: y, d1: self.d1.clone(), d2: self.d2.clone(), order: 0 };
        }
        let g1 = t.scale(self.value, 2.0);
        let shape = t.shape(self.value);
        let g2 = (self.order >= 2).then(|| t.filled(2.0, shape.rows, shape.cols));
        self.compose(t, y, g1, g2)
    }

    /// Elementwise product of two jets with equal shapes.
    pub fn mul<T: Real>(&self, t: &mut Tape<T>, other: &Jet) -> Jet {
        let (a, b) = (self.value, other.value);
        let value = t.mul(a, b);
        let order = self.order.min(other.order);
        let p = self.dim();
        let mut d1 = vec![None; p];
        if order >= 1 {
            for (k, slot) in d1.iter_mut().enumerate() {
                let x = self.d1[k].map(|d| t.mul(d, b));
                let y = other.d1[k].map(|d| t.mul(a, d));
                *slot = opt_add(t, x, y);
            }
        }
        let mut d2 = vec![None; p * p];
        if order >= 2 {
            for (k, l) in self.pairs() {
                let mut acc = self.d2[k * p + l].map(|h| t.mul(h, b));
                let y = other.d2[k * p + l].map(|h| t.mul(a, h));
                acc = opt_add(t, acc, y);
                for (i, j) in [(k, l), (l, k)] {
                    if let (Some(x), Some(y)) = (self.d1[i], other.d1[j]) {
                        let xy = t.mul(x, y);
                        acc = opt_add(t, acc, Some(xy));
                    }
                }
                d2[k * p + l] = acc;
                d2[l * p + k] = acc;
            }
        }
        Jet { value, d1, d2, order }
    }

    /// First derivative along `k`, or a zero block when it vanishes.
    pub fn grad_or_zero<T: Real>(&self, t: &mut Tape<T>, k: usize) -> Var {
        match self.d1[k] {
            Some(v) => v,
            None => {
                let s = t.shape(self.value);
                t.filled(0.0, s.rows, s.cols)
            }
        }
    }

    pub fn hess_or_zero<T: Real>(&self, t: &mut Tape<T>, k: usize, l: usize) -> Var {
        match self.d2[k * self.dim() + l] {
            Some(v) => v,
            None => {
                let s = t.shape(self.value);
                t.filled(0.0, s.rows, s.cols)
            }
        }
    }

    /// Gradient rows stacked into a `p x N` block (requires a `1 x N` value).
    pub fn gradient_block<T: Real>(&self, t: &mut Tape<T>) -> Var {
        let rows: Vec<Var> = (0..self.dim()).map(|k| self.grad_or_zero(t, k)).collect();
        t.stack_rows(&rows)
    }
}
