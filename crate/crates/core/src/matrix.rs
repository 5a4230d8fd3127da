//! Dense n-by-n matrices for n = 2 or 3.
//!
//! Everything downstream works with tiny square matrices, so the storage is
//! a fixed 3x3 block (row stride 3) with the trailing slots unused when
//! n = 2. All loops run to `n`.

use crate::scalar::Scalar;

/// Square matrix of dimension 2 or 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareMatrix<S> {
    n: usize,
    data: [S; 9],
}

impl<S: Scalar> SquareMatrix<S> {
    pub fn zero(n: usize) -> Self {
        assert!(n == 2 || n == 3, "dimension must be 2 or 3");
        Self { n, data: [S::zero(); 9] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.set(i, i, S::one());
        }
        m
    }

    /// Build from rows; panics if `rows` is not n-by-n with n in {2,3}.
    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let n = rows.len();
        let mut m = Self::zero(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "row {i} has wrong length");
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> S {
        self.data[i * 3 + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * 3 + j] = v;
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = Self::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = S::zero();
                for k in 0..n {
                    acc = acc + self.at(i, k) * rhs.at(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| self.at(i, j) * v[j]).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.at(j, i))
    }

    pub fn det(&self) -> S {
        match self.n {
            2 => self.at(0, 0) * self.at(1, 1) - self.at(0, 1) * self.at(1, 0),
            _ => {
                self.at(0, 0) * (self.at(1, 1) * self.at(2, 2) - self.at(1, 2) * self.at(2, 1))
                    - self.at(0, 1) * (self.at(1, 0) * self.at(2, 2) - self.at(1, 2) * self.at(2, 0))
                    + self.at(0, 2) * (self.at(1, 0) * self.at(2, 1) - self.at(1, 1) * self.at(2, 0))
            }
        }
    }

    pub fn trace(&self) -> S {
        (0..self.n).map(|i| self.at(i, i)).sum()
    }

    /// Inverse by adjugate; caller guarantees the determinant is not tiny.
    pub fn inverse(&self) -> Self {
        let d = self.det();
        match self.n {
            2 => {
                let mut m = Self::zero(2);
                m.set(0, 0, self.at(1, 1) / d);
                m.set(0, 1, -self.at(0, 1) / d);
                m.set(1, 0, -self.at(1, 0) / d);
                m.set(1, 1, self.at(0, 0) / d);
                m
            }
            _ => {
                let c = |i: usize, j: usize| -> S {
                    let r = [(i + 1) % 3, (i + 2) % 3];
                    let s = [(j + 1) % 3, (j + 2) % 3];
                    self.at(r[0], s[0]) * self.at(r[1], s[1]) - self.at(r[0], s[1]) * self.at(r[1], s[0])
                };
                // adjugate is the transposed cofactor matrix; with cyclic
                // index shifts the sign pattern is already absorbed
                Self::from_fn(3, |i, j| c(j, i) / d)
            }
        }
    }

    pub fn scale(&self, s: S) -> Self {
        Self::from_fn(self.n, |i, j| self.at(i, j) * s)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self::from_fn(self.n, |i, j| self.at(i, j) + rhs.at(i, j))
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self::from_fn(self.n, |i, j| self.at(i, j) - rhs.at(i, j))
    }

    pub fn max_abs(&self) -> S {
        let mut m = S::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                m = m.max(self.at(i, j).abs());
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> S {
        let mut acc = S::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                acc = acc + self.at(i, j) * self.at(i, j);
            }
        }
        acc.sqrt()
    }

    pub fn col(&self, j: usize) -> Vec<S> {
        (0..self.n).map(|i| self.at(i, j)).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[S]) {
        for i in 0..self.n {
            self.set(i, j, v[i]);
        }
    }

    pub fn is_finite(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.at(i, j).is_finite()))
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues (unsorted) and the orthogonal matrix of column
/// eigenvectors. Converges in a handful of sweeps for n <= 3.
pub fn jacobi_symmetric_eigen<S: Scalar>(m: &SquareMatrix<S>) -> (Vec<S>, SquareMatrix<S>) {
    let n = m.dim();
    let mut a = *m;
    let mut v = SquareMatrix::identity(n);
    let tol = S::epsilon() * m.frobenius_norm().max(S::one());
    for _sweep in 0..60 {
        let mut off = S::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a.at(p, q).abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.at(p, q);
                if apq.abs() <= tol * S::of(1e-3) {
                    continue;
                }
                let theta = (a.at(q, q) - a.at(p, p)) / (S::of(2.0) * apq);
                // stable tangent of the rotation angle
                let t = {
                    let s = if theta >= S::zero() { S::one() } else { -S::one() };
                    s / (theta.abs() + (theta * theta + S::one()).sqrt())
                };
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                // A <- J^T A J on rows/cols p, q
                for k in 0..n {
                    let akp = a.at(k, p);
                    let akq = a.at(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.at(p, k);
                    let aqk = a.at(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.at(k, p);
                    let vkq = v.at(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    ((0..n).map(|i| a.at(i, i)).collect(), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> SquareMatrix<f64> {
        SquareMatrix::from_rows(&[vec![a, b], vec![c, d]])
    }

    #[test]
    fn inverse_roundtrip() {
        let m = m2(2.0, 1.0, 1.0, 1.0);
        let p = m.mul(&m.inverse());
        assert_relative_eq!(p.at(0, 0), 1.0, epsilon = 1e-12);
        assert_relative_eq!(p.at(0, 1), 0.0, epsilon = 1e-12);

        let m3 = SquareMatrix::from_rows(&[
            vec![1.0, 2.0, 0.5],
            vec![0.0, 1.0, -3.0],
            vec![2.0, 0.0, 1.0],
        ]);
        let p3 = m3.mul(&m3.inverse());
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(p3.at(i, j), want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_diagonalizes() {
        let s = SquareMatrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, -1.0],
            vec![0.5, -1.0, 2.0],
        ]);
        let (vals, vecs) = jacobi_symmetric_eigen(&s);
        // reconstruct V diag(vals) V^T
        let mut d = SquareMatrix::zero(3);
        for i in 0..3 {
            d.set(i, i, vals[i]);
        }
        let r = vecs.mul(&d).mul(&vecs.transpose());
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(r.at(i, j), s.at(i, j), epsilon = 1e-10);
            }
        }
    }
}
