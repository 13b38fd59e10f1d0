//! Small dense complex matrices.
//!
//! Everything in the lab lives on at most a handful of qubits, so a plain
//! row-major `Vec` with naive products is both simple and fast enough.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::{re, Real};

/// Square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(f(r, c));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major data. Panics if the length is not a square.
    pub fn from_row_major(dim: usize, data: Vec<Complex<T>>) -> Self {
        assert_eq!(data.len(), dim * dim, "row-major data must be dim*dim");
        Self { dim, data }
    }

    pub fn from_diagonal(diag: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).map(|i| self[(i, i)]).fold(Complex::zero(), |a, b| a + b)
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| *x * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(re(s))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let d = self.dim * other.dim;
        let od = other.dim;
        Self::from_fn(d, |r, c| self[(r / od, c / od)] * other[(r % od, c % od)])
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> Complex<T> {
        let n = self.dim;
        let mut acc = Complex::zero();
        for i in 0..n {
            for k in 0..n {
                acc = acc + self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// `U · self · U†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        &(u * self) * &u.adjoint()
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|r| {
                self.data[r * self.dim..(r + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .fold(Complex::zero(), |a, (m, x)| a + *m * *x)
            })
            .collect()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.norm()))
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm()))
    }

    pub fn hermiticity_error(&self) -> T {
        let mut worst = T::zero();
        for r in 0..self.dim {
            for c in r..self.dim {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn unitarity_error(&self) -> T {
        (&self.adjoint() * self).max_abs_diff(&Self::identity(self.dim))
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
    /// rotations. Returns ascending eigenvalues and the unitary whose columns
    /// are the matching eigenvectors. Only the Hermitian part is used.
    pub fn eigh(&self) -> (Vec<T>, Self) {
        let n = self.dim;
        let half = T::lit(0.5);
        let mut a = Self::from_fn(n, |r, c| (self[(r, c)] + self[(c, r)].conj()) * half);
        let mut v = Self::identity(n);
        let scale = a.frobenius_norm();
        if scale == T::zero() {
            return (vec![T::zero(); n], v);
        }
        let threshold = T::epsilon() * scale;
        for _sweep in 0..64 {
            let mut off = T::zero();
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off + a[(p, q)].norm_sqr();
                }
            }
            if off.sqrt() <= threshold {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let r = apq.norm();
                    if r <= T::min_positive_value() {
                        continue;
                    }
                    let phase = apq / re(r);
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let theta = (aqq - app) / (T::lit(2.0) * r);
                    let t = if theta == T::zero() {
                        T::one()
                    } else {
                        theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt())
                    };
                    let cs = T::one() / (t * t + T::one()).sqrt();
                    let sn = t * cs;
                    // W = diag(1, conj(phase)) · [[c, s], [-s, c]] on the (p, q) plane.
                    let w_pp = re(cs);
                    let w_pq = re(sn);
                    let w_qp = phase.conj() * (-sn);
                    let w_qq = phase.conj() * cs;
                    // A <- A W
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = akp * w_pp + akq * w_qp;
                        a[(k, q)] = akp * w_pq + akq * w_qq;
                    }
                    // A <- W† A
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = w_pp.conj() * apk + w_qp.conj() * aqk;
                        a[(q, k)] = w_pq.conj() * apk + w_qq.conj() * aqk;
                    }
                    a[(p, q)] = Complex::zero();
                    a[(q, p)] = Complex::zero();
                    // V <- V W
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * w_pp + vkq * w_qp;
                        v[(k, q)] = vkp * w_pq + vkq * w_qq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
        let values = order.iter().map(|&i| a[(i, i)].re).collect();
        let vectors = Self::from_fn(n, |r, c| v[(r, order[c])]);
        (values, vectors)
    }

    /// Applies a real function to the spectrum of a Hermitian matrix.
    pub fn hermitian_map(&self, f: impl Fn(T) -> Complex<T>) -> Self {
        let (vals, vecs) = self.eigh();
        let diag: Vec<_> = vals.into_iter().map(f).collect();
        &(&vecs * &Self::from_diagonal(&diag)) * &vecs.adjoint()
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = Complex<T>;
    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.dim + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.dim + c]
    }
}

impl<T: Real> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d = *d + a * *b;
                }
            }
        }
        out
    }
}

impl<T: Real> Add for &Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl<T: Real> Sub for &Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.dim, rhs.dim, "matrix dimensions differ");
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}
