use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{c, re, Real, Tolerances};

use super::{check_qubit, qubit_count};

/// Rotation axis for single-qubit operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Linear operator on `n` qubits, optionally certified unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator<T> {
    matrix: Matrix<T>,
    n_qubits: usize,
    unitary: bool,
}

impl<T: Real> Operator<T> {
    /// Wraps a matrix without any unitarity claim.
    pub fn new(matrix: Matrix<T>) -> Result<Self> {
        let n_qubits = qubit_count(matrix.dim())?;
        Ok(Self {
            matrix,
            n_qubits,
            unitary: false,
        })
    }

    /// Wraps a matrix that must be unitary within `tol.unitary`.
    pub fn unitary(matrix: Matrix<T>) -> Result<Self> {
        Self::unitary_with(matrix, &Tolerances::default())
    }

    pub fn unitary_with(matrix: Matrix<T>, tol: &Tolerances<T>) -> Result<Self> {
        let n_qubits = qubit_count(matrix.dim())?;
        let err = matrix.unitarity_error();
        if err > tol.unitary {
            return Err(Error::NotUnitary(err.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self {
            matrix,
            n_qubits,
            unitary: true,
        })
    }

    pub(crate) fn from_parts(matrix: Matrix<T>, unitary: bool) -> Self {
        let n_qubits = qubit_count(matrix.dim()).expect("power-of-two dimension");
        Self {
            matrix,
            n_qubits,
            unitary,
        }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::from_parts(Matrix::identity(1 << n_qubits), true)
    }

    pub fn pauli_x() -> Self {
        Self::from_parts(
            Matrix::from_row_major(2, vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
            true,
        )
    }

    pub fn pauli_y() -> Self {
        Self::from_parts(
            Matrix::from_row_major(2, vec![c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
            true,
        )
    }

    pub fn pauli_z() -> Self {
        Self::from_parts(
            Matrix::from_row_major(2, vec![c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
            true,
        )
    }

    pub fn pauli(axis: Axis) -> Self {
        match axis {
            Axis::X => Self::pauli_x(),
            Axis::Y => Self::pauli_y(),
            Axis::Z => Self::pauli_z(),
        }
    }

    /// Single-qubit rotation `exp(-i angle σ_axis / 2)`.
    pub fn rotation(axis: Axis, angle: T) -> Self {
        let half = angle / T::lit(2.0);
        let cos = re(half.cos());
        let msin = Complex::new(T::zero(), -half.sin());
        let p = Self::pauli(axis);
        let m = Matrix::from_fn(2, |r, col| {
            let id = if r == col { cos } else { Complex::zero() };
            id + msin * p.matrix[(r, col)]
        });
        Self::from_parts(m, true)
    }

    /// Places a single-qubit operator on `qubit` of an `n_qubits` register.
    pub fn embed(single: &Self, qubit: usize, n_qubits: usize) -> Result<Self> {
        if single.n_qubits != 1 {
            return Err(Error::Dimension {
                expected: 2,
                found: single.dim(),
            });
        }
        check_qubit(qubit, n_qubits)?;
        let mut m = Matrix::identity(1);
        for q in 0..n_qubits {
            let f = if q == qubit {
                single.matrix.clone()
            } else {
                Matrix::identity(2)
            };
            m = m.kron(&f);
        }
        Ok(Self::from_parts(m, single.unitary))
    }

    /// Unitary sending `|0⟩` to the given single-qubit ket (and `|1⟩` to its
    /// orthogonal complement).
    pub fn basis_change(ket: &super::Ket<T>) -> Result<Self> {
        if ket.n_qubits() != 1 {
            return Err(Error::Dimension {
                expected: 2,
                found: ket.dim(),
            });
        }
        let a = ket.amplitude(0);
        let b = ket.amplitude(1);
        let m = Matrix::from_row_major(2, vec![a, -b.conj(), b, a.conj()]);
        Ok(Self::from_parts(m, true))
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.matrix
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.matrix.hermiticity_error() <= tol
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(self.matrix.adjoint(), self.unitary)
    }

    /// Operator product `self · rhs` (rhs acts first).
    pub fn compose(&self, rhs: &Self) -> Self {
        Self::from_parts(&self.matrix * &rhs.matrix, self.unitary && rhs.unitary)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self::from_parts(self.matrix.kron(&other.matrix), self.unitary && other.unitary)
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_parts(self.matrix.scale_real(s), false)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_parts(&self.matrix + &other.matrix, false)
    }

    pub fn apply(&self, ket: &super::Ket<T>) -> Result<super::Ket<T>> {
        if ket.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: ket.dim(),
            });
        }
        super::Ket::normalized(self.matrix.mul_vec(ket.amplitudes()))
    }

    pub fn is_identity_up_to_phase(&self, tol: T) -> bool {
        let ph = self.matrix[(0, 0)];
        if (ph.norm() - T::one()).abs() > tol {
            return false;
        }
        self.matrix
            .max_abs_diff(&Matrix::identity(self.dim()).scale(ph))
            <= tol
    }

    pub fn cast<U: Real>(&self) -> Operator<U> {
        let d = self.dim();
        let m = Matrix::from_fn(d, |r, col| {
            let z = self.matrix[(r, col)];
            Complex::new(U::lit(z.re.to_f64().unwrap()), U::lit(z.im.to_f64().unwrap()))
        });
        Operator::from_parts(m, self.unitary)
    }
}
