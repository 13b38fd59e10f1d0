//! Physical model of a liquid-state NMR register.
//!
//! Frequencies in a [`Molecule`] are in Hz; Hamiltonians are returned in
//! rad/s. Deviation density operators carry the NMR signal; the identity
//! background is dropped.

mod molecule;
mod pps;
mod program;

pub use molecule::{Coupling, Molecule, Regime, Spin};
pub use pps::{canned_pps_program, deviation_fidelity, pps_prepare, pps_target, PpsReport, PPS_FIDELITY_FLOOR};
pub use program::{evolve_program, Event, PulseProgram};

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::qcore::{check_qubit, pauli_string, Axis, Density, DensityKind, Ket, Operator};

/// Length of the gradient-echo measurement block, used for relaxation
/// exposure.
pub const ECHO_DURATION_S: f64 = 7e-3;

/// Internal Hamiltonian in rad/s as a raw matrix.
pub fn internal_hamiltonian_matrix(mol: &Molecule) -> Matrix<f64> {
    let n = mol.n_spins();
    let single = |q: usize, axis: Axis| {
        let mut f = vec![None; n];
        f[q] = Some(axis);
        pauli_string::<f64>(&f)
    };
    let pair = |a: usize, b: usize, axis: Axis| {
        let mut f = vec![None; n];
        f[a] = Some(axis);
        f[b] = Some(axis);
        pauli_string::<f64>(&f)
    };
    let mut h = Matrix::zeros(1 << n);
    for (q, s) in mol.spins.iter().enumerate() {
        h = &h + &single(q, Axis::Z).scale_real(PI * s.shift_hz);
    }
    for c in &mol.couplings {
        let k = PI / 2.0 * c.j_hz;
        h = &h + &pair(c.i, c.j, Axis::Z).scale_real(k);
        if c.regime == Regime::Strong {
            h = &h + &pair(c.i, c.j, Axis::X).scale_real(k);
            h = &h + &pair(c.i, c.j, Axis::Y).scale_real(k);
        }
    }
    h
}

/// `Σ πν_i σz^i + Σ_weak (π/2) J σzσz + Σ_strong (π/2) J σ·σ` in rad/s.
pub fn internal_hamiltonian(mol: &Molecule) -> Operator<f64> {
    Operator::new(internal_hamiltonian_matrix(mol)).expect("power-of-two dimension")
}

/// High-temperature deviation `Σ γ_i σz^i` (relative gyromagnetic ratios).
pub fn thermal_deviation(mol: &Molecule) -> Density<f64> {
    let n = mol.n_spins();
    let d = 1usize << n;
    let diag: Vec<Complex64> = (0..d)
        .map(|i| {
            let v: f64 = mol
                .spins
                .iter()
                .enumerate()
                .map(|(q, s)| s.gyro_rel * z_eigenvalue(i, q, n))
                .sum();
            Complex64::new(v, 0.0)
        })
        .collect();
    Density::unchecked(Matrix::from_diagonal(&diag), DensityKind::Deviation)
}

/// `+1` for `|0⟩`, `-1` for `|1⟩` on qubit `q` of basis index `i`.
fn z_eigenvalue(i: usize, q: usize, n: usize) -> f64 {
    if (i >> (n - 1 - q)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Sum of the σz eigenvalues weighted per spin.
fn weighted_z(i: usize, weights: &[f64]) -> f64 {
    let n = weights.len();
    weights.iter().enumerate().map(|(q, w)| w * z_eigenvalue(i, q, n)).sum()
}

/// Spatial average after a z-gradient: keeps only elements whose total
/// coherence order is zero (populations and zero-quantum terms).
pub fn crusher(rho: &Density<f64>) -> Density<f64> {
    let mut tracker = GradientTracker::new(rho.clone());
    tracker.gradient(&vec![1.0; rho.n_qubits()]);
    tracker.average()
}

/// Emulated non-selective measurement of `qubit` in the basis
/// `{basis_ket, basis_ket⊥}`.
///
/// The sequence is: rotate `basis_ket` to `|0⟩`, gradient, π pulses on the
/// other spins, gradient, π pulses on the other spins, rotate back. The
/// non-target spins refocus while the target's transverse terms dephase.
pub fn gradient_echo_measurement(rho: &Density<f64>, qubit: usize, basis_ket: &Ket<f64>) -> Result<Density<f64>> {
    let n = rho.n_qubits();
    check_qubit(qubit, n)?;
    if basis_ket.n_qubits() != 1 {
        return Err(Error::Dimension {
            expected: 2,
            found: basis_ket.dim(),
        });
    }
    let r = Operator::embed(&Operator::basis_change(basis_ket)?, qubit, n)?;
    let others: Vec<usize> = (0..n).filter(|&q| q != qubit).collect();
    let uniform = vec![1.0; n];
    let mut tracker = GradientTracker::new(rho.conjugate(&r.adjoint()));
    tracker.gradient(&uniform);
    tracker.flip(&others);
    tracker.gradient(&uniform);
    tracker.flip(&others);
    Ok(tracker.average().conjugate(&r))
}

/// Follows the spatial phase winding of every density-matrix element through
/// gradients and π_x pulses; averaging over the sample removes every element
/// with a net winding.
struct GradientTracker {
    rho: Density<f64>,
    winding: Vec<f64>,
}

impl GradientTracker {
    fn new(rho: Density<f64>) -> Self {
        let d = rho.dim();
        Self {
            rho,
            winding: vec![0.0; d * d],
        }
    }

    fn gradient(&mut self, weights: &[f64]) {
        let d = self.rho.dim();
        for r in 0..d {
            for c in 0..d {
                self.winding[r * d + c] += weighted_z(r, weights) - weighted_z(c, weights);
            }
        }
    }

    /// Ideal π_x pulses: X ρ X on each listed qubit (the phase of `-iX`
    /// cancels in the conjugation).
    fn flip(&mut self, qubits: &[usize]) {
        let n = self.rho.n_qubits();
        let d = self.rho.dim();
        let mask = qubits.iter().fold(0usize, |m, &q| m | (1 << (n - 1 - q)));
        let m = self.rho.matrix();
        let flipped = Matrix::from_fn(d, |r, c| m[(r ^ mask, c ^ mask)]);
        let winding = (0..d * d)
            .map(|idx| self.winding[((idx / d) ^ mask) * d + ((idx % d) ^ mask)])
            .collect();
        self.rho = Density::unchecked(flipped, self.rho.kind());
        self.winding = winding;
    }

    fn average(self) -> Density<f64> {
        let d = self.rho.dim();
        let m = self.rho.matrix();
        let out = Matrix::from_fn(d, |r, c| {
            if self.winding[r * d + c].abs() < 1e-9 {
                m[(r, c)]
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Density::unchecked(out, self.rho.kind())
    }
}
