//! Error channels and the Monte-Carlo experiment pipeline.

mod pipeline;

pub use pipeline::{
    echo_comparison, uncertainty_map, uncertainty_task, EchoRow, Gate, Lab, Mode, TrialOutcome,
    TrialStatistics,
};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nmr::Molecule;
use crate::qcore::{pauli_string, Axis, Density, DensityKind};

/// Longest interval of coherent evolution between two relaxation steps.
pub const RELAXATION_STEP_S: f64 = 1e-3;

/// Relaxation times of one spin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinRelaxation {
    pub t1_s: f64,
    pub t2_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationSettings {
    pub enabled: bool,
    /// Overrides the molecule's relaxation times when present.
    #[serde(default)]
    pub per_spin: Option<Vec<SpinRelaxation>>,
}

/// How the controlled-SWAP is realized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoherentError {
    /// Exact gate.
    None,
    /// Optimized shaped pulse (28 ms) with the given fidelity goal.
    GrapePulse { fidelity_goal: f64, max_iterations: usize },
    /// `exp(-i s H) U` with a seeded random Hermitian `H` of unit spectral norm.
    Perturbation { strength: f64 },
}

/// Configurable error budget of a simulated run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    pub relaxation: RelaxationSettings,
    /// Depolarizing strength applied to the prepared pseudo-pure state.
    pub prep_error: f64,
    pub coherent_error: CoherentError,
    /// Standard deviation of the additive noise on each Pauli expectation.
    pub readout_sigma: f64,
    /// Post-selection probabilities below this count as failed trials.
    pub post_selection_floor: f64,
    /// Relaxation exposure of the input-preparation pulses.
    pub prep_pulse_s: f64,
    /// Duration of the controlled-SWAP when no shaped pulse is used.
    pub gate_duration_s: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            relaxation: RelaxationSettings {
                enabled: true,
                per_spin: None,
            },
            prep_error: 0.01,
            coherent_error: CoherentError::GrapePulse {
                fidelity_goal: 0.999,
                max_iterations: 1500,
            },
            readout_sigma: 0.01,
            post_selection_floor: 1e-3,
            prep_pulse_s: 2e-3,
            gate_duration_s: 28e-3,
            seed: 1,
        }
    }
}

impl NoiseModel {
    /// Every error source switched off.
    pub fn noiseless() -> Self {
        Self {
            relaxation: RelaxationSettings {
                enabled: false,
                per_spin: None,
            },
            prep_error: 0.0,
            coherent_error: CoherentError::None,
            readout_sigma: 0.0,
            post_selection_floor: 1e-12,
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidNoise(format!("{name} must be a non-negative number, got {v}")))
            }
        };
        nonneg("prep_error", self.prep_error)?;
        if self.prep_error > 1.0 {
            return Err(Error::InvalidNoise("prep_error must not exceed 1".into()));
        }
        nonneg("readout_sigma", self.readout_sigma)?;
        nonneg("post_selection_floor", self.post_selection_floor)?;
        nonneg("prep_pulse_s", self.prep_pulse_s)?;
        nonneg("gate_duration_s", self.gate_duration_s)?;
        match self.coherent_error {
            CoherentError::Perturbation { strength } => nonneg("strength", strength)?,
            CoherentError::GrapePulse { fidelity_goal, .. } if !(fidelity_goal > 0.0 && fidelity_goal <= 1.0) => {
                return Err(Error::InvalidNoise(format!("fidelity goal {fidelity_goal} outside (0, 1]")));
            }
            _ => {}
        }
        if let Some(spins) = &self.relaxation.per_spin {
            for s in spins {
                if !(s.t2_s > 0.0 && s.t1_s >= s.t2_s) {
                    return Err(Error::RelaxationOrder { t1: s.t1_s, t2: s.t2_s });
                }
            }
        }
        Ok(())
    }

    /// `(T1, T2)` per spin when relaxation is enabled.
    pub fn relaxation_times(&self, mol: &Molecule) -> Result<Option<Vec<(f64, f64)>>> {
        if !self.relaxation.enabled {
            return Ok(None);
        }
        let times: Vec<(f64, f64)> = match &self.relaxation.per_spin {
            Some(spins) => {
                if spins.len() != mol.n_spins() {
                    return Err(Error::InvalidNoise(format!(
                        "{} relaxation entries for {} spins",
                        spins.len(),
                        mol.n_spins()
                    )));
                }
                spins.iter().map(|s| (s.t1_s, s.t2_s)).collect()
            }
            None => mol.spins.iter().map(|s| (s.t1_s, s.t2_s)).collect(),
        };
        for &(t1, t2) in &times {
            if !(t2 > 0.0 && t1 >= t2) {
                return Err(Error::RelaxationOrder { t1, t2 });
            }
        }
        Ok(Some(times))
    }
}

/// Kraus operators of amplitude damping toward `|0⟩` followed by pure
/// dephasing, with the dephasing chosen so that coherences decay as
/// `e^{-dt/T2}` overall.
pub fn relaxation_kraus(dt: f64, t1: f64, t2: f64) -> Result<Vec<Matrix<f64>>> {
    if !(dt >= 0.0) {
        return Err(Error::InvalidArgument(format!("negative time step {dt}")));
    }
    if !(t2 > 0.0 && t1 >= t2) {
        return Err(Error::RelaxationOrder { t1, t2 });
    }
    let keep = (-dt / t1).exp();
    let gamma = 1.0 - keep;
    let lambda = (-dt * (1.0 / t2 - 0.5 / t1)).exp();
    let z = |v: f64| Complex64::new(v, 0.0);
    let damping = [
        Matrix::from_row_major(2, vec![z(1.0), z(0.0), z(0.0), z(keep.sqrt())]),
        Matrix::from_row_major(2, vec![z(0.0), z(gamma.sqrt()), z(0.0), z(0.0)]),
    ];
    let a = ((1.0 + lambda) / 2.0).sqrt();
    let b = ((1.0 - lambda) / 2.0).max(0.0).sqrt();
    let dephasing = [
        Matrix::from_row_major(2, vec![z(a), z(0.0), z(0.0), z(a)]),
        Matrix::from_row_major(2, vec![z(b), z(0.0), z(0.0), z(-b)]),
    ];
    let mut out = Vec::new();
    for d in &dephasing {
        for k in &damping {
            let m = d * k;
            if m.max_abs() > 0.0 {
                out.push(m);
            }
        }
    }
    Ok(out)
}

pub(crate) fn apply_relaxation(rho: &Density<f64>, dt: f64, times: &[(f64, f64)]) -> Result<Density<f64>> {
    if times.len() != rho.n_qubits() {
        return Err(Error::Dimension {
            expected: rho.n_qubits(),
            found: times.len(),
        });
    }
    let mut out = rho.clone();
    for (q, &(t1, t2)) in times.iter().enumerate() {
        out = out.apply_local_channel(q, &relaxation_kraus(dt, t1, t2)?)?;
    }
    Ok(out)
}

/// Applies free relaxation for `dt` seconds with the molecule's T1/T2.
pub fn relaxation_step(rho: &Density<f64>, dt: f64, mol: &Molecule) -> Result<Density<f64>> {
    let times: Vec<(f64, f64)> = mol.spins.iter().map(|s| (s.t1_s, s.t2_s)).collect();
    apply_relaxation(rho, dt, &times)
}

/// Applies relaxation for `duration` in steps of at most [`RELAXATION_STEP_S`].
pub(crate) fn relax_for(rho: &Density<f64>, duration: f64, times: Option<&[(f64, f64)]>) -> Result<Density<f64>> {
    let Some(times) = times else {
        return Ok(rho.clone());
    };
    if duration <= 0.0 {
        return Ok(rho.clone());
    }
    let steps = (duration / RELAXATION_STEP_S).ceil().max(1.0) as usize;
    let dt = duration / steps as f64;
    let mut out = rho.clone();
    for _ in 0..steps {
        out = apply_relaxation(&out, dt, times)?;
    }
    Ok(out)
}

/// All `4^n − 1` non-identity Pauli strings, in base-4 order (I, X, Y, Z per
/// qubit, qubit 0 most significant).
pub fn pauli_basis(n_qubits: usize) -> Vec<Matrix<f64>> {
    let axes = [None, Some(Axis::X), Some(Axis::Y), Some(Axis::Z)];
    (1..1usize << (2 * n_qubits))
        .map(|code| {
            let factors: Vec<Option<Axis>> = (0..n_qubits)
                .map(|q| axes[(code >> (2 * (n_qubits - 1 - q))) & 3])
                .collect();
            pauli_string(&factors)
        })
        .collect()
}

/// Pauli-expectation tomography with additive Gaussian readout noise and
/// linear inversion. The estimate is Hermitian with unit trace; positivity
/// is not enforced.
pub fn noisy_tomography<R: Rng + ?Sized>(rho: &Density<f64>, sigma: f64, rng: &mut R) -> Result<Density<f64>> {
    let basis = pauli_basis(rho.n_qubits());
    noisy_tomography_with(rho, sigma, rng, &basis)
}

pub(crate) fn noisy_tomography_with<R: Rng + ?Sized>(
    rho: &Density<f64>,
    sigma: f64,
    rng: &mut R,
    basis: &[Matrix<f64>],
) -> Result<Density<f64>> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("readout sigma {sigma}")));
    }
    let d = rho.dim();
    let tr = rho.trace();
    if tr.abs() <= f64::MIN_POSITIVE {
        return Err(Error::Trace { expected: 1.0, found: tr });
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut est = Matrix::identity(d);
    for p in basis {
        let mut value = rho.expectation(p).re / tr;
        if sigma > 0.0 {
            value += normal.sample(rng);
        }
        est = &est + &p.scale_real(value);
    }
    let est = est.scale_real(1.0 / d as f64);
    // Symmetrize away rounding.
    let herm = (&est + &est.adjoint()).scale_real(0.5);
    Ok(Density::unchecked(herm, DensityKind::Physical))
}

#[cfg(test)]
mod tests;
