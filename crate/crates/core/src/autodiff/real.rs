//! Scalar types the tape can run on.
//!
//! `f64` is the workhorse. [`Dual`] carries up to [`MAX_SEEDS`] forward
//! tangents so that a reverse sweep over a `Tape<Dual>` produces Hessian
//! columns (forward-over-reverse).

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Number of simultaneous tangent directions carried by [`Dual`].
pub const MAX_SEEDS: usize = 3;

pub trait Real:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn from_f64(x: f64) -> Self;
    /// The ordinary value, with all tangent information dropped.
    fn primal(self) -> f64;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn is_finite(self) -> bool;

    fn tanh(self) -> Self;
    fn sigmoid(self) -> Self;
    fn softplus(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn recip(self) -> Self {
        Self::one() / self
    }
    fn scale(self, c: f64) -> Self {
        self * Self::from_f64(c)
    }

    /// `c = alpha * a * b + beta * c` on strided row/column storage.
    ///
    /// Shapes are `a: m x k`, `b: k x n`, `c: m x n`; strides are given as
    /// (row stride, column stride).
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: &[Self],
        a_strides: (usize, usize),
        b: &[Self],
        b_strides: (usize, usize),
        beta: f64,
        c: &mut [Self],
    ) {
        let beta = Self::from_f64(beta);
        for i in 0..m {
            for j in 0..n {
                let mut acc = Self::zero();
                for l in 0..k {
                    acc += a[i * a_strides.0 + l * a_strides.1] * b[l * b_strides.0 + j * b_strides.1];
                }
                let out = &mut c[i * n + j];
                *out = if beta == Self::zero() { acc } else { beta * *out + acc };
            }
        }
    }
}

/// Numerically stable `log(1 + e^x)`.
pub fn softplus_f64(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid_f64(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn primal(self) -> f64 {
        self
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn sigmoid(self) -> Self {
        sigmoid_f64(self)
    }
    #[inline]
    fn softplus(self) -> Self {
        softplus_f64(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn recip(self) -> Self {
        1.0 / self
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        self * c
    }

    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        a: &[f64],
        a_strides: (usize, usize),
        b: &[f64],
        b_strides: (usize, usize),
        beta: f64,
        c: &mut [f64],
    ) {
        if m == 0 || n == 0 {
            return;
        }
        if k == 0 {
            if beta == 0.0 {
                c[..m * n].iter_mut().for_each(|x| *x = 0.0);
            } else {
                c[..m * n].iter_mut().for_each(|x| *x *= beta);
            }
            return;
        }
        assert!(a.len() >= (m - 1) * a_strides.0 + (k - 1) * a_strides.1 + 1);
        assert!(b.len() >= (k - 1) * b_strides.0 + (n - 1) * b_strides.1 + 1);
        assert!(c.len() >= m * n);
        // SAFETY: the asserts above bound every index dgemm will touch.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                1.0,
                a.as_ptr(),
                a_strides.0 as isize,
                a_strides.1 as isize,
                b.as_ptr(),
                b_strides.0 as isize,
                b_strides.1 as isize,
                beta,
                c.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }
}

/// Forward-mode dual number with [`MAX_SEEDS`] tangent slots.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Dual {
    pub re: f64,
    pub eps: [f64; MAX_SEEDS],
}

impl Dual {
    pub fn constant(re: f64) -> Self {
        Dual { re, eps: [0.0; MAX_SEEDS] }
    }

    /// A variable seeded along tangent slot `slot`.
    pub fn seeded(re: f64, slot: usize) -> Self {
        let mut eps = [0.0; MAX_SEEDS];
        eps[slot] = 1.0;
        Dual { re, eps }
    }

    #[inline]
    fn chain(self, f: f64, df: f64) -> Self {
        let mut eps = self.eps;
        for e in eps.iter_mut() {
            *e *= df;
        }
        Dual { re: f, eps }
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, o: Dual) -> Dual {
        let mut eps = self.eps;
        for (e, oe) in eps.iter_mut().zip(o.eps) {
            *e += oe;
        }
        Dual { re: self.re + o.re, eps }
    }
}

impl AddAssign for Dual {
    #[inline]
    fn add_assign(&mut self, o: Dual) {
        *self = *self + o;
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, o: Dual) -> Dual {
        let mut eps = self.eps;
        for (e, oe) in eps.iter_mut().zip(o.eps) {
            *e -= oe;
        }
        Dual { re: self.re - o.re, eps }
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, o: Dual) -> Dual {
        let mut eps = [0.0; MAX_SEEDS];
        for i in 0..MAX_SEEDS {
            eps[i] = self.eps[i] * o.re + self.re * o.eps[i];
        }
        Dual { re: self.re * o.re, eps }
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, o: Dual) -> Dual {
        let inv = 1.0 / o.re;
        let re = self.re * inv;
        let mut eps = [0.0; MAX_SEEDS];
        for i in 0..MAX_SEEDS {
            eps[i] = (self.eps[i] - re * o.eps[i]) * inv;
        }
        Dual { re, eps }
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        self.chain(-self.re, -1.0)
    }
}

impl Real for Dual {
    fn from_f64(x: f64) -> Self {
        Dual::constant(x)
    }
    fn primal(self) -> f64 {
        self.re
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.eps.iter().all(|e| e.is_finite())
    }
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        self.chain(t, 1.0 - t * t)
    }
    fn sigmoid(self) -> Self {
        let s = sigmoid_f64(self.re);
        self.chain(s, s * (1.0 - s))
    }
    fn softplus(self) -> Self {
        self.chain(softplus_f64(self.re), sigmoid_f64(self.re))
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn abs(self) -> Self {
        let sign = if self.re > 0.0 {
            1.0
        } else if self.re < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(self.re.abs(), sign)
    }
    fn scale(self, c: f64) -> Self {
        self.chain(self.re * c, c)
    }
}
