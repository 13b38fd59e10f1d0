use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{re, Real, Tolerances};

use super::{check_qubit, qubit_count, Ket, Operator};

/// Whether a density operator is a normalized state or an NMR deviation
/// (traceless) operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DensityKind {
    Physical,
    Deviation,
}

/// Hermitian density operator on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Density<T> {
    matrix: Matrix<T>,
    n_qubits: usize,
    kind: DensityKind,
}

impl<T: Real> Density<T> {
    /// Validated physical state: Hermitian, unit trace, positive semidefinite.
    pub fn physical(matrix: Matrix<T>) -> Result<Self> {
        Self::physical_with(matrix, &Tolerances::default())
    }

    pub fn physical_with(matrix: Matrix<T>, tol: &Tolerances<T>) -> Result<Self> {
        let n_qubits = qubit_count(matrix.dim())?;
        check_hermitian(&matrix, tol)?;
        let tr = matrix.trace().re;
        if (tr - T::one()).abs() > tol.trace {
            return Err(Error::Trace {
                expected: 1.0,
                found: tr.to_f64().unwrap_or(f64::NAN),
            });
        }
        let (vals, _) = matrix.eigh();
        if vals[0] < -tol.psd {
            return Err(Error::NotPositive(vals[0].to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self {
            matrix,
            n_qubits,
            kind: DensityKind::Physical,
        })
    }

    /// Validated deviation operator: Hermitian and traceless.
    pub fn deviation(matrix: Matrix<T>) -> Result<Self> {
        Self::deviation_with(matrix, &Tolerances::default())
    }

    pub fn deviation_with(matrix: Matrix<T>, tol: &Tolerances<T>) -> Result<Self> {
        let n_qubits = qubit_count(matrix.dim())?;
        check_hermitian(&matrix, tol)?;
        let tr = matrix.trace().re;
        if tr.abs() > tol.trace * T::lit(matrix.dim() as f64) * (T::one() + matrix.max_abs()) {
            return Err(Error::Trace {
                expected: 0.0,
                found: tr.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self {
            matrix,
            n_qubits,
            kind: DensityKind::Deviation,
        })
    }

    /// Wraps a matrix without validation. Used for estimates (e.g. linear
    /// inversion tomography) that are Hermitian with unit trace but may have
    /// small negative eigenvalues.
    pub fn unchecked(matrix: Matrix<T>, kind: DensityKind) -> Self {
        let n_qubits = qubit_count(matrix.dim()).expect("power-of-two dimension");
        Self {
            matrix,
            n_qubits,
            kind,
        }
    }

    pub fn pure(ket: &Ket<T>) -> Self {
        let a = ket.amplitudes();
        let m = Matrix::from_fn(ket.dim(), |r, c| a[r] * a[c].conj());
        Self::unchecked(m, DensityKind::Physical)
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1 << n_qubits;
        Self::unchecked(
            Matrix::identity(d).scale_real(T::one() / T::lit(d as f64)),
            DensityKind::Physical,
        )
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.matrix
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn trace(&self) -> T {
        self.matrix.trace().re
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> T {
        self.matrix.trace_product(&self.matrix).re
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        self.matrix.eigh().0
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, u: &Operator<T>) -> Self {
        Self {
            matrix: self.matrix.conjugate_by(u.matrix()),
            n_qubits: self.n_qubits,
            kind: self.kind,
        }
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let kind = if self.kind == DensityKind::Physical && other.kind == DensityKind::Physical {
            DensityKind::Physical
        } else {
            DensityKind::Deviation
        };
        Self {
            matrix: self.matrix.kron(&other.matrix),
            n_qubits: self.n_qubits + other.n_qubits,
            kind,
        }
    }

    /// Same matrix, different kind tag.
    pub fn with_kind(self, kind: DensityKind) -> Self {
        Self { kind, ..self }
    }

    /// Applies a single-qubit channel given by its Kraus operators (2×2) to
    /// `qubit`, without forming the full-register Kraus operators.
    pub fn apply_local_channel(&self, qubit: usize, kraus: &[Matrix<T>]) -> Result<Self> {
        check_qubit(qubit, self.n_qubits)?;
        let d = self.dim();
        let shift = self.n_qubits - 1 - qubit;
        let mut out = Matrix::zeros(d);
        for k in kraus {
            if k.dim() != 2 {
                return Err(Error::Dimension {
                    expected: 2,
                    found: k.dim(),
                });
            }
            for r in 0..d {
                let rb = (r >> shift) & 1;
                for col in 0..d {
                    let cb = (col >> shift) & 1;
                    let mut acc = Complex::zero();
                    for a in 0..2 {
                        let kra = k[(rb, a)];
                        if kra.is_zero() {
                            continue;
                        }
                        let rr = (r & !(1 << shift)) | (a << shift);
                        for b in 0..2 {
                            let kcb = k[(cb, b)].conj();
                            if kcb.is_zero() {
                                continue;
                            }
                            let cc = (col & !(1 << shift)) | (b << shift);
                            acc = acc + kra * self.matrix[(rr, cc)] * kcb;
                        }
                    }
                    out[(r, col)] = out[(r, col)] + acc;
                }
            }
        }
        Ok(Self {
            matrix: out,
            n_qubits: self.n_qubits,
            kind: self.kind,
        })
    }

    /// Convex mixture `(1-w) ρ + w I/d` (depolarizing).
    pub fn depolarize(&self, w: T) -> Self {
        let d = self.dim();
        let tr = self.trace();
        let mixed = Matrix::identity(d).scale_real(tr / T::lit(d as f64));
        Self {
            matrix: &self.matrix.scale_real(T::one() - w) + &mixed.scale_real(w),
            n_qubits: self.n_qubits,
            kind: self.kind,
        }
    }

    /// Expectation value `tr(ρ O)`.
    pub fn expectation(&self, op: &Matrix<T>) -> Complex<T> {
        self.matrix.trace_product(op)
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            matrix: self.matrix.scale(re(s)),
            n_qubits: self.n_qubits,
            kind: self.kind,
        }
    }
}

fn check_hermitian<T: Real>(m: &Matrix<T>, tol: &Tolerances<T>) -> Result<()> {
    let herr = m.hermiticity_error();
    let scale = T::one().max(m.max_abs());
    if herr > tol.hermitian * scale {
        return Err(Error::NotHermitian(herr.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}
