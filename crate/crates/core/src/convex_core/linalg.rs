//! Small dense linear algebra for the low dimensions this crate works in.

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};

/// Square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![T::one(); n])
    }

    pub fn diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_row_major(n: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("matrix rows must form a square".into()));
        }
        Ok(Self { n, data: rows.iter().flatten().copied().collect() })
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.n.max(1)).map(|r| r.to_vec()).collect()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            *o = row.iter().zip(x).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        }
    }

    /// `selfᵀ x`.
    pub fn mul_vec_transposed(&self, x: &[T], out: &mut [T]) {
        for (j, o) in out.iter_mut().enumerate().take(self.n) {
            *o = (0..self.n).fold(T::zero(), |acc, i| acc + self.get(i, j) * x[i]);
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let v = (0..n).fold(T::zero(), |acc, k| acc + self.get(i, k) * other.get(k, j));
                out.set(i, j, v);
            }
        }
        out
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self.get(i, j) == T::zero()))
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt()
    }

    /// LU factorization with partial pivoting; `None` when singular.
    fn lu(&self) -> Option<(Vec<T>, Vec<usize>, T)> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        for k in 0..n {
            let (p, pv) = (k..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold((k, T::zero()), |best, c| if c.1 > best.1 { c } else { best });
            if pv == T::zero() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                let f = a[i * n + k] / a[k * n + k];
                a[i * n + k] = f;
                for j in k + 1..n {
                    a[i * n + j] = a[i * n + j] - f * a[k * n + j];
                }
            }
        }
        Some((a, perm, sign))
    }

    pub fn det(&self) -> T {
        match self.lu() {
            None => T::zero(),
            Some((a, _, sign)) => (0..self.n).fold(sign, |acc, i| acc * a[i * self.n + i]),
        }
    }

    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        let n = self.n;
        let (a, perm, _) =
            self.lu().ok_or_else(|| Error::InvalidArgument("singular matrix".into()))?;
        let mut y: Vec<T> = perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                y[i] = y[i] - a[i * n + j] * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                y[i] = y[i] - a[i * n + j] * y[j];
            }
            y[i] = y[i] / a[i * n + i];
        }
        Ok(y)
    }

    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let mut inv = Self::zeros(n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            let col = self.solve(&e)?;
            for i in 0..n {
                inv.set(i, j, col[i]);
            }
        }
        Ok(inv)
    }

    /// Lower Cholesky factor, or `None` if some pivot is not strictly positive.
    pub fn cholesky(&self) -> Option<Self> {
        let n = self.n;
        let mut l = Self::zeros(n);
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d = d - l.get(j, k) * l.get(j, k);
            }
            if !(d > T::zero()) || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            l.set(j, j, djj);
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s = s - l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / djj);
            }
        }
        Some(l)
    }
}

/// Positive-definite quadratic form `q(y) = yᵀ A y` kept together with its
/// Cholesky factor `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct QuadraticForm<T> {
    matrix: Matrix<T>,
    factor: Matrix<T>,
    det: T,
}

impl<T: Scalar> QuadraticForm<T> {
    pub fn new(matrix: Matrix<T>) -> Result<Self> {
        let scale = matrix.max_abs().max(T::one());
        if !matrix.is_symmetric(lit::<T>(1e-12) * scale) {
            return Err(Error::InvalidMetric("matrix is not symmetric".into()));
        }
        let factor = matrix
            .cholesky()
            .ok_or_else(|| Error::InvalidMetric("matrix is not positive definite".into()))?;
        let det = (0..factor.dim()).fold(T::one(), |acc, i| acc * factor.get(i, i) * factor.get(i, i));
        Ok(Self { matrix, factor, det })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(Matrix::identity(n)).expect("identity is positive definite")
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    /// Lower-triangular `L` with `A = L Lᵀ`.
    pub fn factor(&self) -> &Matrix<T> {
        &self.factor
    }

    pub fn det(&self) -> T {
        self.det
    }

    pub fn eval(&self, y: &[T]) -> T {
        let n = self.dim();
        let mut acc = T::zero();
        for i in 0..n {
            let mut row = T::zero();
            for j in 0..n {
                row = row + self.matrix.get(i, j) * y[j];
            }
            acc = acc + y[i] * row;
        }
        acc
    }

    /// Writes `Lᵀ y`, so that `q(y) = ‖Lᵀ y‖²`.
    pub fn whiten_into(&self, y: &[T], out: &mut [T]) {
        self.factor.mul_vec_transposed(y, out);
    }

    /// Inverse of [`Self::whiten_into`]: solves `Lᵀ x = z`.
    pub fn unwhiten_into(&self, z: &[T], out: &mut [T]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in i + 1..n {
                s = s - self.factor.get(j, i) * out[j];
            }
            out[i] = s / self.factor.get(i, i);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_solve() {
        let m = Matrix::<f64>::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert!((m.det() - 5.0).abs() < 1e-14);
        let x = m.solve(&[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn quadratic_form_det_is_product_of_squared_pivots() {
        let q = QuadraticForm::new(Matrix::<f64>::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap()).unwrap();
        assert!((q.det() - 8.0).abs() < 1e-12);
        let y = [0.3, -1.2];
        let mut w = [0.0; 2];
        q.whiten_into(&y, &mut w);
        assert!((w[0] * w[0] + w[1] * w[1] - q.eval(&y)).abs() < 1e-12);
        let mut back = [0.0; 2];
        q.unwhiten_into(&w, &mut back);
        assert!((back[0] - y[0]).abs() < 1e-14 && (back[1] - y[1]).abs() < 1e-14);
    }

    #[test]
    fn rejects_indefinite() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(QuadraticForm::new(m), Err(Error::InvalidMetric(_))));
    }
}
