//! Ideal gate-level superposition protocol.
//!
//! An ancilla `|ν⟩ = α|0⟩ + β|1⟩` controls a swap of the two input registers;
//! projecting the second input onto the referential state `|χ⟩` and the
//! ancilla onto `|μ⟩ ∝ |⟨φ1|χ⟩||0⟩ + |⟨φ2|χ⟩||1⟩` leaves the first input
//! register in
//!
//! ```text
//! α (⟨χ|φ2⟩/|⟨χ|φ2⟩|) |φ1⟩ + β (⟨χ|φ1⟩/|⟨χ|φ1⟩|) |φ2⟩   (renormalized)
//! ```
//!
//! Register layout: qubit 0 is the ancilla, qubit 1 holds `|φ1⟩` and
//! qubit 2 holds `|φ2⟩`. The swap fires when the ancilla is `|1⟩`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::qcore::{bloch_ket, Ket, Operator, ProjectSubsystem};
use crate::scalar::{re, Real, Tolerances};

pub const ANCILLA: usize = 0;
pub const FIRST_INPUT: usize = 1;
pub const SECOND_INPUT: usize = 2;

/// One instance of the protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperpositionTask<T> {
    phi1: Ket<T>,
    phi2: Ket<T>,
    chi: Ket<T>,
    alpha: Complex<T>,
    beta: Complex<T>,
    overlap1: Complex<T>,
    overlap2: Complex<T>,
}

impl<T: Real> SuperpositionTask<T> {
    /// Builds a task; all three kets must be single-qubit and the weights
    /// must satisfy `|α|² + |β|² = 1`.
    pub fn new(phi1: Ket<T>, phi2: Ket<T>, chi: Ket<T>, alpha: Complex<T>, beta: Complex<T>) -> Result<Self> {
        for k in [&phi1, &phi2, &chi] {
            if k.n_qubits() != 1 {
                return Err(Error::Dimension {
                    expected: 2,
                    found: k.dim(),
                });
            }
        }
        check_weights(alpha, beta, &Tolerances::default())?;
        let overlap1 = phi1.inner(&chi);
        let overlap2 = phi2.inner(&chi);
        Ok(Self {
            phi1,
            phi2,
            chi,
            alpha,
            beta,
            overlap1,
            overlap2,
        })
    }

    pub fn phi1(&self) -> &Ket<T> {
        &self.phi1
    }

    pub fn phi2(&self) -> &Ket<T> {
        &self.phi2
    }

    pub fn chi(&self) -> &Ket<T> {
        &self.chi
    }

    pub fn alpha(&self) -> Complex<T> {
        self.alpha
    }

    pub fn beta(&self) -> Complex<T> {
        self.beta
    }

    /// `⟨φ1|χ⟩`.
    pub fn overlap1(&self) -> Complex<T> {
        self.overlap1
    }

    /// `⟨φ2|χ⟩`.
    pub fn overlap2(&self) -> Complex<T> {
        self.overlap2
    }

    /// The ancilla ket `α|0⟩ + β|1⟩`.
    pub fn ancilla(&self) -> Ket<T> {
        ancilla_state(self.alpha, self.beta).expect("weights validated at construction")
    }

    /// `|ν⟩ ⊗ |φ1⟩ ⊗ |φ2⟩`.
    pub fn initial_state(&self) -> Ket<T> {
        self.ancilla().tensor(&self.phi1).tensor(&self.phi2)
    }

    /// The normalized ancilla projection target.
    pub fn mu(&self) -> Result<Ket<T>> {
        mu_state(&self.phi1, &self.phi2, &self.chi)
    }
}

/// Result of an ideal run.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolOutcome<T> {
    /// State left on the first input register.
    pub output: Ket<T>,
    /// Joint probability of both post-selections.
    pub success_probability: T,
}

fn check_weights<T: Real>(alpha: Complex<T>, beta: Complex<T>, tol: &Tolerances<T>) -> Result<()> {
    let s = alpha.norm_sqr() + beta.norm_sqr();
    if (s - T::one()).abs() > tol.norm {
        return Err(Error::UnnormalizedWeights(s.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

/// `α|0⟩ + β|1⟩`.
pub fn ancilla_state<T: Real>(alpha: Complex<T>, beta: Complex<T>) -> Result<Ket<T>> {
    check_weights(alpha, beta, &Tolerances::default())?;
    Ket::normalized(vec![alpha, beta])
}

/// `|μ⟩ ∝ |⟨φ1|χ⟩||0⟩ + |⟨φ2|χ⟩||1⟩`, normalized.
pub fn mu_state<T: Real>(phi1: &Ket<T>, phi2: &Ket<T>, chi: &Ket<T>) -> Result<Ket<T>> {
    let a = phi1.inner(chi).norm();
    let b = phi2.inner(chi).norm();
    if a <= T::epsilon() && b <= T::epsilon() {
        return Err(Error::ReferenceOrthogonalToBoth);
    }
    Ket::normalized(vec![re(a), re(b)])
}

/// Fredkin gate on three qubits: qubit 0 controls, qubits 1 and 2 are
/// exchanged when the control is `|1⟩`.
pub fn controlled_swap<T: Real>() -> Operator<T> {
    let perm = |i: usize| -> usize {
        match i {
            0b101 => 0b110,
            0b110 => 0b101,
            other => other,
        }
    };
    let m = Matrix::from_fn(8, |r, c| if perm(c) == r { re(T::one()) } else { re(T::zero()) });
    Operator::unitary(m).expect("permutation matrix is unitary")
}

/// Runs the protocol on the ideal circuit with default tolerances.
pub fn run_ideal<T: Real>(task: &SuperpositionTask<T>) -> Result<ProtocolOutcome<T>> {
    run_ideal_with(task, &Tolerances::default())
}

/// Prepares `|ν⟩|φ1⟩|φ2⟩`, applies the controlled swap, projects the second
/// input onto `|χ⟩` and the ancilla onto `|μ⟩`, and returns the first-input
/// register together with the joint post-selection probability.
pub fn run_ideal_with<T: Real>(task: &SuperpositionTask<T>, tol: &Tolerances<T>) -> Result<ProtocolOutcome<T>> {
    if task.overlap1.norm() <= T::epsilon() || task.overlap2.norm() <= T::epsilon() {
        return Err(Error::ZeroOverlap);
    }
    let state = controlled_swap::<T>().apply(&task.initial_state())?;
    let after_chi = state.project_subsystem_with(SECOND_INPUT, &task.chi, tol)?;
    let mu = task.mu()?;
    let after_mu = after_chi.post_state.project_subsystem_with(ANCILLA, &mu, tol)?;
    let success_probability = after_chi.probability * after_mu.probability;
    if success_probability < tol.post_selection_floor {
        return Err(Error::PostSelectionFailed(success_probability.to_f64().unwrap_or(0.0)));
    }
    // The post-selected state is |μ⟩ ⊗ ψ ⊗ |χ⟩; peel off the known factors.
    let (without_chi, _) = after_mu.post_state.contract(SECOND_INPUT, &task.chi, tol)?;
    let (output, _) = without_chi.contract(ANCILLA, &mu, tol)?;
    Ok(ProtocolOutcome {
        output,
        success_probability,
    })
}

/// Closed-form target of the protocol.
pub fn analytic_superposition<T: Real>(task: &SuperpositionTask<T>) -> Result<Ket<T>> {
    // ⟨χ|φ⟩ = conj(⟨φ|χ⟩)
    let c1 = task.overlap1.conj();
    let c2 = task.overlap2.conj();
    if c1.norm() <= T::epsilon() || c2.norm() <= T::epsilon() {
        return Err(Error::ZeroOverlap);
    }
    let w1 = task.alpha * c2 / re(c2.norm());
    let w2 = task.beta * c1 / re(c1.norm());
    let amps = task
        .phi1
        .amplitudes()
        .iter()
        .zip(task.phi2.amplitudes())
        .map(|(a, b)| w1 * *a + w2 * *b)
        .collect();
    Ket::normalized(amps)
}

/// The two experiment families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    /// Fixed inputs `|+⟩, |−⟩`; ancilla `cos(θ/2)|0⟩ + sin(θ/2)|1⟩`.
    A,
    /// Ancilla `|+⟩`, `φ1 = |0⟩`, `φ2 = cos(θ/2)|0⟩ + i sin(θ/2)|1⟩`.
    B,
}

impl std::fmt::Display for Group {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Group::A => f.write_str("A"),
            Group::B => f.write_str("B"),
        }
    }
}

/// Task for one point of an experiment group; `χ = |0⟩` in both groups.
pub fn group_task<T: Real>(group: Group, theta: T) -> SuperpositionTask<T> {
    let chi = Ket::zero();
    let task = match group {
        Group::A => {
            let nu = bloch_ket(theta, T::zero());
            SuperpositionTask::new(Ket::plus(), Ket::minus(), chi, nu.amplitude(0), nu.amplitude(1))
        }
        Group::B => {
            let h = re(T::FRAC_1_SQRT_2());
            let phi2 = bloch_ket(theta, T::FRAC_PI_2());
            SuperpositionTask::new(Ket::zero(), phi2, chi, h, h)
        }
    };
    task.expect("group parameterizations are valid")
}

/// Twelve sweep angles `kπ/12`, `k = 0..11`.
pub fn theta_grid<T: Real>() -> Vec<T> {
    (0..12).map(|k| T::PI() * T::lit(k as f64) / T::lit(12.0)).collect()
}

/// Predicted `|⟨φ_sup|φ1⟩|²` along a group sweep.
pub fn theory_overlap<T: Real>(group: Group, theta: T) -> T {
    let c = (theta / T::lit(2.0)).cos();
    match group {
        Group::A => c * c,
        Group::B => {
            let two = T::lit(2.0);
            (T::one() + two * c + c * c) / (two + two * c)
        }
    }
}
