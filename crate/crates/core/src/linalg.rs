//! Small dense square matrices and the cyclic Jacobi eigensolver.
//!
//! Dimensions here are tiny (d <= 4), so everything is a flat row-major
//! `Vec` and the algorithms favour determinism over speed.

use crate::error::{Error, Result};
use crate::scalar::Real;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

/// Square `d x d` matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    d: usize,
    a: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(d: usize) -> Self {
        Mat { d, a: vec![T::zero(); d * d] }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_diag(&vec![T::one(); d])
    }

    pub fn from_diag(diag: &[T]) -> Self {
        let d = diag.len();
        let mut m = Self::zeros(d);
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Build from row-major entries; `entries.len()` must be a perfect square.
    pub fn from_row_major(entries: &[T]) -> Result<Self> {
        let d = (entries.len() as f64).sqrt().round() as usize;
        if d * d != entries.len() || d == 0 {
            return Err(Error::DimensionMismatch { expected: d * d, got: entries.len() });
        }
        Ok(Mat { d, a: entries.to_vec() })
    }

    pub fn from_fn(d: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut a = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                a.push(f(i, j));
            }
        }
        Mat { d, a }
    }

    /// Outer product `u v^T`.
    pub fn outer(u: &[T], v: &[T]) -> Self {
        Self::from_fn(u.len(), |i, j| u[i] * v[j])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn as_slice(&self) -> &[T] {
        &self.a
    }

    pub fn row_major(&self) -> Vec<T> {
        self.a.clone()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.d, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: T) -> Self {
        Mat { d: self.d, a: self.a.iter().map(|&x| x * s).collect() }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.d);
        (0..self.d)
            .map(|i| {
                let row = &self.a[i * self.d..(i + 1) * self.d];
                row.iter().zip(v).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
            })
            .collect()
    }

    pub fn trace(&self) -> T {
        (0..self.d).fold(T::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn frobenius(&self) -> T {
        self.a.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.a.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().all(|x| x.is_finite())
    }

    /// `(A + A^T) / 2`.
    pub fn symmetrize(&self) -> Self {
        let half = T::of(0.5);
        Self::from_fn(self.d, |i, j| (self[(i, j)] + self[(j, i)]) * half)
    }

    pub fn asymmetry(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.d {
            for j in i + 1..self.d {
                m = m.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        m
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> T {
        let ata = self.transpose() * self;
        let (vals, _) = ata.symmetrize().sym_eigen();
        vals.last().copied().unwrap_or_else(T::zero).max(T::zero()).sqrt()
    }

    pub fn det(&self) -> T {
        let (lu, perm_sign, singular) = self.lu();
        if singular {
            return T::zero();
        }
        (0..self.d).fold(perm_sign, |acc, i| acc * lu[(i, i)])
    }

    fn lu(&self) -> (Self, T, bool) {
        let d = self.d;
        let mut m = self.clone();
        let mut sign = T::one();
        let mut singular = false;
        for k in 0..d {
            let (piv, _) = (k..d).fold((k, T::zero()), |(bi, bv), i| {
                let v = m[(i, k)].abs();
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
            if m[(piv, k)] == T::zero() {
                singular = true;
                continue;
            }
            if piv != k {
                for j in 0..d {
                    m.a.swap(k * d + j, piv * d + j);
                }
                sign = -sign;
            }
            for i in k + 1..d {
                let f = m[(i, k)] / m[(k, k)];
                m[(i, k)] = f;
                for j in k + 1..d {
                    let t = m[(k, j)];
                    m[(i, j)] = m[(i, j)] - f * t;
                }
            }
        }
        (m, sign, singular)
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let d = self.d;
        let scale = self.max_abs();
        if scale == T::zero() || !self.is_finite() {
            return Err(Error::Singular);
        }
        let mut m = self.clone();
        let mut inv = Self::identity(d);
        let tiny = scale * T::epsilon() * T::of(d as f64);
        for k in 0..d {
            let mut piv = k;
            for i in k + 1..d {
                if m[(i, k)].abs() > m[(piv, k)].abs() {
                    piv = i;
                }
            }
            if m[(piv, k)].abs() <= tiny {
                return Err(Error::Singular);
            }
            if piv != k {
                for j in 0..d {
                    m.a.swap(k * d + j, piv * d + j);
                    inv.a.swap(k * d + j, piv * d + j);
                }
            }
            let p = m[(k, k)];
            for j in 0..d {
                m[(k, j)] = m[(k, j)] / p;
                inv[(k, j)] = inv[(k, j)] / p;
            }
            for i in 0..d {
                if i == k {
                    continue;
                }
                let f = m[(i, k)];
                if f == T::zero() {
                    continue;
                }
                for j in 0..d {
                    let (mk, ik) = (m[(k, j)], inv[(k, j)]);
                    m[(i, j)] = m[(i, j)] - f * mk;
                    inv[(i, j)] = inv[(i, j)] - f * ik;
                }
            }
        }
        Ok(inv)
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi sweeps.
    ///
    /// Returns eigenvalues in ascending order and the matrix whose columns are
    /// the matching orthonormal eigenvectors.
    pub fn sym_eigen(&self) -> (Vec<T>, Self) {
        let d = self.d;
        let mut a = self.symmetrize();
        let mut v = Self::identity(d);
        let tol = T::of(1e-14).max(T::epsilon());
        let norm = a.frobenius();
        if norm > T::zero() {
            for _sweep in 0..64 {
                let mut off = T::zero();
                for p in 0..d {
                    for q in p + 1..d {
                        off = off + a[(p, q)] * a[(p, q)];
                    }
                }
                if off.sqrt() <= tol * norm {
                    break;
                }
                for p in 0..d {
                    for q in p + 1..d {
                        let apq = a[(p, q)];
                        if apq == T::zero() {
                            continue;
                        }
                        let two = T::of(2.0);
                        let theta = (a[(q, q)] - a[(p, p)]) / (two * apq);
                        let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                        let c = T::one() / (t * t + T::one()).sqrt();
                        let s = t * c;
                        for k in 0..d {
                            let akp = a[(k, p)];
                            let akq = a[(k, q)];
                            a[(k, p)] = c * akp - s * akq;
                            a[(k, q)] = s * akp + c * akq;
                        }
                        for k in 0..d {
                            let apk = a[(p, k)];
                            let aqk = a[(q, k)];
                            a[(p, k)] = c * apk - s * aqk;
                            a[(q, k)] = s * apk + c * aqk;
                        }
                        for k in 0..d {
                            let vkp = v[(k, p)];
                            let vkq = v[(k, q)];
                            v[(k, p)] = c * vkp - s * vkq;
                            v[(k, q)] = s * vkp + c * vkq;
                        }
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
        let vals = order.iter().map(|&i| a[(i, i)]).collect();
        let vecs = Self::from_fn(d, |r, c| v[(r, order[c])]);
        (vals, vecs)
    }

    /// `V diag(f(lambda)) V^T` for a symmetric matrix.
    pub fn sym_apply(&self, f: impl Fn(T) -> T) -> Self {
        let (vals, v) = self.sym_eigen();
        let d = self.d;
        let fv: Vec<T> = vals.into_iter().map(f).collect();
        Self::from_fn(d, |i, j| (0..d).fold(T::zero(), |acc, k| acc + v[(i, k)] * fv[k] * v[(j, k)])).symmetrize()
    }

    /// Map entries to another scalar type.
    pub fn cast<U: Real>(&self) -> Mat<U> {
        Mat { d: self.d, a: self.a.iter().map(|&x| U::of(x.to_f64_lossy())).collect() }
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.a[i * self.d + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.a[i * self.d + j]
    }
}

impl<T: Real> Mul for &Mat<T> {
    type Output = Mat<T>;
    fn mul(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!(self.d, rhs.d, "matrix dimension mismatch");
        let d = self.d;
        Mat::from_fn(d, |i, j| (0..d).fold(T::zero(), |acc, k| acc + self[(i, k)] * rhs[(k, j)]))
    }
}

impl<T: Real> Mul<&Mat<T>> for Mat<T> {
    type Output = Mat<T>;
    fn mul(self, rhs: &Mat<T>) -> Mat<T> {
        &self * rhs
    }
}

impl<T: Real> Mul for Mat<T> {
    type Output = Mat<T>;
    fn mul(self, rhs: Mat<T>) -> Mat<T> {
        &self * &rhs
    }
}

impl<T: Real> Add for &Mat<T> {
    type Output = Mat<T>;
    fn add(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!(self.d, rhs.d, "matrix dimension mismatch");
        Mat { d: self.d, a: self.a.iter().zip(&rhs.a).map(|(&x, &y)| x + y).collect() }
    }
}

impl<T: Real> Sub for &Mat<T> {
    type Output = Mat<T>;
    fn sub(self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!(self.d, rhs.d, "matrix dimension mismatch");
        Mat { d: self.d, a: self.a.iter().zip(&rhs.a).map(|(&x, &y)| x - y).collect() }
    }
}

/// Euclidean inner product.
#[inline]
pub fn dot<T: Real>(u: &[T], v: &[T]) -> T {
    u.iter().zip(v).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Euclidean norm.
#[inline]
pub fn norm<T: Real>(v: &[T]) -> T {
    dot(v, v).sqrt()
}
