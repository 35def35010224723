//! Cyclic Jacobi eigen-solver for small symmetric matrices and the
//! wave-speed bound built on it.

use crate::linalg::SymMatrix;

pub const JACOBI_MAX_SWEEPS: usize = 30;
pub const JACOBI_TOLERANCE: f64 = 1e-14;

/// Eigen-decomposition `M = V diag(lambda) V^T`, eigenvalues ascending,
/// eigenvectors stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct SmallSymmetricEig {
    pub values: Vec<f64>,
    pub vectors: SymMatrix,
    pub sweeps: usize,
}

impl SmallSymmetricEig {
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.values.len();
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let s = (0..n).map(|k| self.vectors.get(i, k) * self.values[k] * self.vectors.get(j, k)).sum();
                m.set(i, j, s);
            }
        }
        m
    }
}

fn off_diagonal_norm(a: &SymMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a.get(i, j) * a.get(i, j);
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi rotations until the off-diagonal norm drops below
/// `1e-14 * |M|_F` or 30 sweeps have run. Only the symmetric part of `m`
/// is meaningful.
pub fn jacobi_eigen(m: &SymMatrix) -> SmallSymmetricEig {
    let n = m.dim();
    let mut a = m.clone();
    let mut v = SymMatrix::identity(n);
    let norm = m.frobenius_norm();
    let mut sweeps = 0;
    while sweeps < JACOBI_MAX_SWEEPS && off_diagonal_norm(&a) > JACOBI_TOLERANCE * norm {
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = if theta == 0.0 { 1.0 } else { theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt()) };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a.get(k, p), a.get(k, q));
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let (apk, aqk) = (a.get(p, k), a.get(q, k));
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let (vkp, vkq) = (v.get(k, p), v.get(k, q));
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
        sweeps += 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).total_cmp(&a.get(j, j)));
    let values = order.iter().map(|&i| a.get(i, i)).collect();
    let mut vectors = SymMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors.set(k, col, v.get(k, src));
        }
    }
    SmallSymmetricEig { values, vectors, sweeps }
}

/// Symmetric square root of a positive semi-definite matrix; negative
/// eigenvalues are treated as zero.
pub fn psd_sqrt(b: &SymMatrix) -> SymMatrix {
    let e = jacobi_eigen(b);
    let roots: Vec<f64> = e.values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    SmallSymmetricEig { values: roots, vectors: e.vectors, sweeps: e.sweeps }.reconstruct()
}

/// Spectral radius of `B^(1/2) A B^(1/2)`, which equals the largest
/// characteristic speed of the flux Jacobian `A B`.
pub fn wave_speed(a: &SymMatrix, b: &SymMatrix) -> f64 {
    if a.dim() == 1 {
        return (a.get(0, 0) * b.get(0, 0).max(0.0)).abs();
    }
    let s = psd_sqrt(b);
    let m = s.matmul(a).matmul(&s).symmetrized();
    jacobi_eigen(&m).values.iter().fold(0.0, |r, l| r.max(l.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_by_two_example() {
        let m = SymMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let e = jacobi_eigen(&m);
        assert!((e.values[0] - 1.0).abs() < 1e-15 && (e.values[1] - 3.0).abs() < 1e-15);
        let r = e.reconstruct();
        for (x, y) in r.as_slice().iter().zip(m.as_slice()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_and_diagonal_matrices_need_no_sweeps() {
        assert_eq!(jacobi_eigen(&SymMatrix::zeros(3)).sweeps, 0);
        let d = SymMatrix::from_rows(&[&[3.0, 0.0], &[0.0, -1.0]]);
        let e = jacobi_eigen(&d);
        assert_eq!(e.values, vec![-1.0, 3.0]);
    }

    #[test]
    fn scalar_wave_speed_is_product_magnitude() {
        let a = SymMatrix::from_rows(&[&[-1.5]]);
        let b = SymMatrix::from_rows(&[&[0.25]]);
        assert_eq!(wave_speed(&a, &b), 0.375);
    }

    fn sym3() -> impl Strategy<Value = SymMatrix> {
        prop::collection::vec(-5.0f64..5.0, 6)
            .prop_map(|x| SymMatrix::from_rows(&[&[x[0], x[1], x[2]], &[x[1], x[3], x[4]], &[x[2], x[4], x[5]]]))
    }

    proptest! {
        #[test]
        fn jacobi_converges_and_reconstructs(m in sym3()) {
            let e = jacobi_eigen(&m);
            let norm = m.frobenius_norm();
            let vt = e.vectors.transpose();
            let d = vt.matmul(&m).matmul(&e.vectors);
            let mut off: f64 = 0.0;
            for i in 0..3 { for j in 0..3 { if i != j { off += d.get(i, j).powi(2); } } }
            prop_assert!(off.sqrt() <= 1e-12 * norm.max(f64::MIN_POSITIVE));
            let r = e.reconstruct();
            for (x, y) in r.as_slice().iter().zip(m.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + norm));
            }
            prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
