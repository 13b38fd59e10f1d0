//! Complex linear algebra and quantum-state primitives.
//!
//! Conventions used throughout the crate:
//!
//! * qubit 0 is the leftmost tensor factor, so it is the most significant
//!   bit of a basis index (`|q0 q1 q2⟩`);
//! * Hamiltonians are in angular-frequency units (rad/s) and a duration `t`
//!   gives the propagator `exp(-i H t)`.

mod density;
mod ket;
mod operator;

pub use density::{Density, DensityKind};
pub use ket::Ket;
pub use operator::{Axis, Operator};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{Real, Tolerances};

pub(crate) fn qubit_count(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

pub(crate) fn check_qubit(index: usize, n_qubits: usize) -> Result<()> {
    if index >= n_qubits {
        return Err(Error::InvalidQubit { index, n_qubits });
    }
    Ok(())
}

/// Kronecker product on the joint space.
pub trait Tensor {
    fn tensor(&self, other: &Self) -> Self;
}

impl<T: Real> Tensor for Ket<T> {
    fn tensor(&self, other: &Self) -> Self {
        Ket::tensor(self, other)
    }
}

impl<T: Real> Tensor for Operator<T> {
    fn tensor(&self, other: &Self) -> Self {
        Operator::tensor(self, other)
    }
}

impl<T: Real> Tensor for Density<T> {
    fn tensor(&self, other: &Self) -> Self {
        Density::tensor(self, other)
    }
}

/// `a ⊗ b`.
pub fn tensor<S: Tensor>(a: &S, b: &S) -> S {
    a.tensor(b)
}

/// Reduced operator on the `keep` qubits (returned in ascending qubit order).
pub fn partial_trace<T: Real>(rho: &Density<T>, keep: &[usize]) -> Result<Density<T>> {
    if keep.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    let n = rho.n_qubits();
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    for w in kept.windows(2) {
        if w[0] == w[1] {
            return Err(Error::DuplicateQubit(w[0]));
        }
    }
    for &q in &kept {
        check_qubit(q, n)?;
    }
    let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();
    // Bit position (from the least significant end) of each qubit.
    let pos = |q: usize| n - 1 - q;
    let compose = |k_idx: usize, t_idx: usize| -> usize {
        let mut full = 0usize;
        for (i, &q) in kept.iter().enumerate() {
            let bit = (k_idx >> (kept.len() - 1 - i)) & 1;
            full |= bit << pos(q);
        }
        for (i, &q) in traced.iter().enumerate() {
            let bit = (t_idx >> (traced.len() - 1 - i)) & 1;
            full |= bit << pos(q);
        }
        full
    };
    let dk = 1usize << kept.len();
    let dt = 1usize << traced.len();
    let m = rho.matrix();
    let reduced = Matrix::from_fn(dk, |r, c| {
        let mut acc = Complex::new(T::zero(), T::zero());
        for t in 0..dt {
            acc = acc + m[(compose(r, t), compose(c, t))];
        }
        acc
    });
    Ok(Density::unchecked(reduced, rho.kind()))
}

/// Outcome of projecting one qubit onto a single-qubit ket.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection<S, T> {
    /// Renormalized post-measurement state on the full register.
    pub post_state: S,
    /// Probability of the projected outcome.
    pub probability: T,
}

/// States that support a projective measurement of one qubit.
pub trait ProjectSubsystem<T: Real>: Sized {
    fn project_subsystem_with(
        &self,
        qubit: usize,
        onto: &Ket<T>,
        tol: &Tolerances<T>,
    ) -> Result<Projection<Self, T>>;
}

impl<T: Real> ProjectSubsystem<T> for Ket<T> {
    fn project_subsystem_with(
        &self,
        qubit: usize,
        onto: &Ket<T>,
        tol: &Tolerances<T>,
    ) -> Result<Projection<Self, T>> {
        let raw = self.contract_raw(qubit, onto)?;
        let probability = raw.iter().map(|a| a.norm_sqr()).sum::<T>();
        if probability < tol.post_selection_floor {
            return Err(Error::PostSelectionFailed(probability.to_f64().unwrap_or(0.0)));
        }
        let n = self.n_qubits();
        let shift = n - 1 - qubit;
        let low_mask = (1usize << shift) - 1;
        let amps = (0..self.dim())
            .map(|i| {
                let bit = (i >> shift) & 1;
                let reduced = ((i >> (shift + 1)) << shift) | (i & low_mask);
                onto.amplitude(bit) * raw[reduced]
            })
            .collect();
        Ok(Projection {
            post_state: Ket::normalized(amps)?,
            probability,
        })
    }
}

impl<T: Real> ProjectSubsystem<T> for Density<T> {
    fn project_subsystem_with(
        &self,
        qubit: usize,
        onto: &Ket<T>,
        tol: &Tolerances<T>,
    ) -> Result<Projection<Self, T>> {
        if self.kind() != DensityKind::Physical {
            return Err(Error::InvalidArgument(
                "projection probabilities need a physical density operator".into(),
            ));
        }
        if onto.n_qubits() != 1 {
            return Err(Error::Dimension {
                expected: 2,
                found: onto.dim(),
            });
        }
        let proj = Density::pure(onto).into_matrix();
        let projected = self.apply_local_channel(qubit, &[proj])?;
        let probability = projected.trace();
        if !(probability >= tol.post_selection_floor) {
            return Err(Error::PostSelectionFailed(probability.to_f64().unwrap_or(0.0)));
        }
        Ok(Projection {
            post_state: projected.scale(T::one() / probability),
            probability,
        })
    }
}

/// Projects `qubit` of `state` onto `onto`, renormalizing, with default
/// tolerances.
pub fn project_subsystem<T: Real, S: ProjectSubsystem<T>>(
    state: &S,
    qubit: usize,
    onto: &Ket<T>,
) -> Result<Projection<S, T>> {
    state.project_subsystem_with(qubit, onto, &Tolerances::default())
}

/// Normalized overlap `tr(ρσ) / sqrt(tr(ρ²) tr(σ²))`.
///
/// Symmetric, and 1 for identical arguments. For positive semidefinite
/// inputs the value lies in `[0, 1]`; reconstructed estimates with small
/// negative eigenvalues are reported as computed, without clamping.
pub fn fidelity<T: Real>(rho_th: &Density<T>, rho_exp: &Density<T>) -> Result<T> {
    if rho_th.dim() != rho_exp.dim() {
        return Err(Error::Dimension {
            expected: rho_th.dim(),
            found: rho_exp.dim(),
        });
    }
    if rho_th.kind() != DensityKind::Physical || rho_exp.kind() != DensityKind::Physical {
        return Err(Error::InvalidArgument(
            "fidelity expects physical density operators".into(),
        ));
    }
    let pa = rho_th.purity();
    let pb = rho_exp.purity();
    if pa <= T::min_positive_value() || pb <= T::min_positive_value() {
        return Err(Error::ZeroPurity);
    }
    let overlap = rho_th.matrix().trace_product(rho_exp.matrix()).re;
    Ok(overlap / (pa * pb).sqrt())
}

/// `exp(-i H t)` for a Hermitian `H` in rad/s and `t` in seconds.
pub fn evolve<T: Real>(h: &Operator<T>, t: T) -> Result<Operator<T>> {
    let tol = Tolerances::<T>::default();
    let herr = h.matrix().hermiticity_error();
    if herr > tol.hermitian * T::one().max(h.matrix().max_abs()) {
        return Err(Error::NotHermitian(herr.to_f64().unwrap_or(f64::NAN)));
    }
    let u = h
        .matrix()
        .hermitian_map(|lambda| Complex::from_polar(T::one(), -lambda * t));
    Ok(Operator::from_parts(u, true))
}

/// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
pub fn bloch_ket<T: Real>(theta: T, phi: T) -> Ket<T> {
    let half = theta / T::lit(2.0);
    Ket::new(vec![
        Complex::new(half.cos(), T::zero()),
        Complex::from_polar(half.sin(), phi),
    ])
    .expect("Bloch ket is normalized")
}

/// Matrix of the Pauli string given as one axis (or `None` for identity)
/// per qubit.
pub fn pauli_string<T: Real>(factors: &[Option<Axis>]) -> Matrix<T> {
    factors.iter().fold(Matrix::identity(1), |acc, f| {
        let m = match f {
            None => Matrix::identity(2),
            Some(a) => Operator::<T>::pauli(*a).into_matrix(),
        };
        acc.kron(&m)
    })
}
