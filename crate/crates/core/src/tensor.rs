//! Small dense tensor containers for chart-local computations.
//!
//! Dimensions here are tiny (a handful of coordinates), so everything is a
//! flat `Vec` with stride indexing and straightforward Gaussian elimination.

use crate::scalar::Real;

/// Square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Matrix { dim, data: vec![T::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Matrix { dim, data }
    }

    pub fn diag(entries: &[T]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.set(i, i, e);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] = v;
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Bilinear form x^T M y.
    pub fn bilinear(&self, x: &[T], y: &[T]) -> T {
        let mut acc = T::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += x[i] * self.get(i, j) * y[j];
            }
        }
        acc
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Matrix<T>) -> T {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn scale(&self, s: T) -> Matrix<T> {
        Matrix { dim: self.dim, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.dim, other.dim);
        Matrix::from_fn(self.dim, |i, j| {
            (0..self.dim).map(|k| self.get(i, k) * other.get(k, j)).sum()
        })
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> T {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut det = T::one();
        for col in 0..n {
            let mut pivot = col;
            for row in col + 1..n {
                if a[row * n + col].abs() > a[pivot * n + col].abs() {
                    pivot = row;
                }
            }
            if a[pivot * n + col] == T::zero() {
                return T::zero();
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                }
                det = -det;
            }
            det *= a[col * n + col];
            for row in col + 1..n {
                let factor = a[row * n + col] / a[col * n + col];
                for k in col..n {
                    let sub = factor * a[col * n + k];
                    a[row * n + k] -= sub;
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan with partial pivoting; `None` if a pivot vanishes.
    pub fn inverse(&self) -> Option<Matrix<T>> {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut inv = Matrix::<T>::identity(n).data;
        for col in 0..n {
            let mut pivot = col;
            for row in col + 1..n {
                if a[row * n + col].abs() > a[pivot * n + col].abs() {
                    pivot = row;
                }
            }
            if a[pivot * n + col] == T::zero() {
                return None;
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                    inv.swap(col * n + k, pivot * n + k);
                }
            }
            let p = a[col * n + col];
            for k in 0..n {
                a[col * n + k] /= p;
                inv[col * n + k] /= p;
            }
            for row in 0..n {
                if row == col {
                    continue;
                }
                let factor = a[row * n + col];
                if factor != T::zero() {
                    for k in 0..n {
                        let s1 = factor * a[col * n + k];
                        a[row * n + k] -= s1;
                        let s2 = factor * inv[col * n + k];
                        inv[row * n + k] -= s2;
                    }
                }
            }
        }
        Some(Matrix { dim: n, data: inv })
    }
}

/// Rank-3 array indexed as `(a, i, j)`; connection coefficients store Γ^a_ij.
#[derive(Clone, Debug, PartialEq)]
pub struct Rank3<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> Rank3<T> {
    pub fn zeros(dim: usize) -> Self {
        Rank3 { dim, data: vec![T::zero(); dim * dim * dim] }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(dim * dim * dim);
        for a in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    data.push(f(a, i, j));
                }
            }
        }
        Rank3 { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, a: usize, i: usize, j: usize) -> T {
        self.data[(a * self.dim + i) * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, a: usize, i: usize, j: usize, v: T) {
        self.data[(a * self.dim + i) * self.dim + j] = v;
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }
}

/// Rank-4 array indexed as `(a, b, i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rank4<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> Rank4<T> {
    pub fn zeros(dim: usize) -> Self {
        Rank4 { dim, data: vec![T::zero(); dim * dim * dim * dim] }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(dim * dim * dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                for i in 0..dim {
                    for j in 0..dim {
                        data.push(f(a, b, i, j));
                    }
                }
            }
        }
        Rank4 { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, i: usize, j: usize) -> T {
        self.data[((a * self.dim + b) * self.dim + i) * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, i: usize, j: usize, v: T) {
        self.data[((a * self.dim + b) * self.dim + i) * self.dim + j] = v;
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }
}

/// Euclidean dot product of component slices.
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(&x, &y)| x * y).sum()
}

/// a + s*b, componentwise.
pub fn axpy<T: Real>(a: &[T], s: T, b: &[T]) -> Vec<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(&x, &y)| x + s * y).collect()
}

pub fn vec_scale<T: Real>(s: T, v: &[T]) -> Vec<T> {
    v.iter().map(|&x| s * x).collect()
}

pub fn vec_sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(&x, &y)| x - y).collect()
}

pub fn vec_add<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(&x, &y)| x + y).collect()
}

pub fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}
