//! The simulated experiment: pseudo-pure preparation, input preparation,
//! controlled-SWAP, measurement emulation, tomography and post-selection.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grape::{optimize, propagate, ControlPulse, OptimizerConfig};
use crate::linalg::Matrix;
use crate::nmr::{
    canned_pps_program, evolve_program, gradient_echo_measurement, pps_prepare, Event, Molecule, PulseProgram,
    ECHO_DURATION_S,
};
use crate::protocol::{
    analytic_superposition, controlled_swap, group_task, run_ideal, Group, SuperpositionTask, ANCILLA, FIRST_INPUT,
    SECOND_INPUT,
};
use crate::qcore::{evolve, fidelity, partial_trace, Density, DensityKind, Ket, Operator, ProjectSubsystem};
use crate::Tolerances;

use super::{noisy_tomography_with, pauli_basis, relax_for, CoherentError, NoiseModel};

/// How the protocol is executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Gate-level circuit, no physics.
    Ideal,
    /// Gradient-echo measurement emulation before tomography.
    WithEcho,
    /// Three-qubit tomography right after the gate.
    NoEcho,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Ideal => "ideal",
            Mode::WithEcho => "with_echo",
            Mode::NoEcho => "no_echo",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(Mode::Ideal),
            "with_echo" => Ok(Mode::WithEcho),
            "no_echo" => Ok(Mode::NoEcho),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?}"))),
        }
    }
}

/// Realization of the controlled-SWAP.
#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    Unitary(Operator<f64>),
    Pulse(ControlPulse),
}

/// Result of one noisy trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    /// Normalized overlap with the analytic superposition.
    pub fidelity: f64,
    pub success_probability: f64,
    /// `⟨φ1|ρ|φ1⟩` of the output.
    pub overlap: f64,
    pub output: Density<f64>,
}

/// Statistics over the successful trials of one configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialStatistics {
    pub mean_fidelity: f64,
    pub std_fidelity: f64,
    pub mean_overlap: f64,
    pub std_overlap: f64,
    pub mean_success_probability: f64,
    /// Successful trials.
    pub n_trials: usize,
    pub failed_trials: usize,
}

/// A molecule, a noise model and everything that only depends on them: the
/// prepared pseudo-pure state and the controlled-SWAP realization.
#[derive(Clone, Debug)]
pub struct Lab {
    mol: Molecule,
    noise: NoiseModel,
    pps: Density<f64>,
    pps_fidelity: f64,
    gate: Gate,
    gate_fidelity: f64,
    relaxation: Option<Vec<(f64, f64)>>,
    paulis: Vec<Matrix<f64>>,
}

impl Lab {
    /// Builds the lab, calibrating the preparation sequence and, if the noise
    /// model asks for it, optimizing the controlled-SWAP pulse.
    pub fn new(mol: &Molecule, noise: &NoiseModel) -> Result<Self> {
        noise.validate()?;
        let cswap = controlled_swap::<f64>();
        let gate = match noise.coherent_error {
            CoherentError::None => Gate::Unitary(cswap),
            CoherentError::Perturbation { strength } => Gate::Unitary(perturbed(&cswap, strength, noise.seed)?),
            CoherentError::GrapePulse {
                fidelity_goal,
                max_iterations,
            } => {
                let mut config = OptimizerConfig::new(cswap, noise.gate_duration_s);
                config.fidelity_goal = fidelity_goal;
                config.max_iterations = max_iterations;
                config.seed = noise.seed;
                Gate::Pulse(optimize(&config, mol, None)?.pulse)
            }
        };
        Self::with_gate(mol, noise, gate)
    }

    /// Builds the lab around a given controlled-SWAP realization.
    pub fn with_gate(mol: &Molecule, noise: &NoiseModel, gate: Gate) -> Result<Self> {
        noise.validate()?;
        mol.validate()?;
        if mol.n_spins() != 3 {
            return Err(Error::InvalidMolecule("the protocol needs three spins".into()));
        }
        let report = pps_prepare(mol, &canned_pps_program(mol)?)?;
        let pps = physical_from_deviation(&report.state)?;
        let cswap = controlled_swap::<f64>();
        let gate_fidelity = match &gate {
            Gate::Unitary(u) => crate::grape::gate_fidelity(u, &cswap)?,
            Gate::Pulse(p) => crate::grape::gate_fidelity(&propagate(p, mol)?, &cswap)?,
        };
        Ok(Self {
            relaxation: noise.relaxation_times(mol)?,
            mol: mol.clone(),
            noise: noise.clone(),
            pps,
            pps_fidelity: report.fidelity,
            gate,
            gate_fidelity,
            paulis: pauli_basis(3),
        })
    }

    pub fn molecule(&self) -> &Molecule {
        &self.mol
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    /// Physical state equivalent of the prepared pseudo-pure deviation.
    pub fn pps_state(&self) -> &Density<f64> {
        &self.pps
    }

    pub fn pps_fidelity(&self) -> f64 {
        self.pps_fidelity
    }

    pub fn gate(&self) -> &Gate {
        &self.gate
    }

    pub fn gate_fidelity(&self) -> f64 {
        self.gate_fidelity
    }

    /// Deterministic part of a trial: the three-qubit state handed to
    /// tomography.
    pub fn readout_state(&self, task: &SuperpositionTask<f64>, mode: Mode) -> Result<Density<f64>> {
        let relax = self.relaxation.as_deref();
        let mut rho = self.pps.depolarize(self.noise.prep_error);
        let prep = Operator::basis_change(&task.ancilla())?
            .tensor(&Operator::basis_change(task.phi1())?)
            .tensor(&Operator::basis_change(task.phi2())?);
        let half_prep = self.noise.prep_pulse_s / 2.0;
        rho = relax_for(&rho, half_prep, relax)?;
        rho = rho.conjugate(&prep);
        rho = relax_for(&rho, half_prep, relax)?;
        rho = match &self.gate {
            Gate::Unitary(u) => {
                let half = self.noise.gate_duration_s / 2.0;
                let r = relax_for(&rho, half, relax)?.conjugate(u);
                relax_for(&r, half, relax)?
            }
            Gate::Pulse(p) => {
                let program = PulseProgram::new(vec![Event::ShapedPulse { pulse: p.clone() }])?;
                evolve_program(&rho, &program, &self.mol, Some(&self.noise))?
            }
        };
        if mode == Mode::WithEcho {
            let half = ECHO_DURATION_S / 2.0;
            rho = gradient_echo_measurement(&rho, SECOND_INPUT, task.chi())?;
            rho = relax_for(&rho, half, relax)?;
            rho = gradient_echo_measurement(&rho, ANCILLA, &task.mu()?)?;
            rho = relax_for(&rho, half, relax)?;
        }
        Ok(rho)
    }

    /// Tomography, post-selection and scoring of a prepared readout state.
    pub fn finish_trial(
        &self,
        task: &SuperpositionTask<f64>,
        readout: &Density<f64>,
        rng: &mut ChaCha8Rng,
    ) -> Result<TrialOutcome> {
        let est = noisy_tomography_with(readout, self.noise.readout_sigma, rng, &self.paulis)?;
        let tol = Tolerances {
            post_selection_floor: self.noise.post_selection_floor,
            ..Tolerances::default()
        };
        let first = est.project_subsystem_with(SECOND_INPUT, task.chi(), &tol)?;
        let second = first.post_state.project_subsystem_with(ANCILLA, &task.mu()?, &tol)?;
        let success_probability = first.probability * second.probability;
        if !(success_probability >= self.noise.post_selection_floor) {
            return Err(Error::PostSelectionFailed(success_probability));
        }
        let output = partial_trace(&second.post_state, &[FIRST_INPUT])?;
        score(task, output, success_probability)
    }

    /// One trial with the given random stream.
    pub fn run_trial(&self, task: &SuperpositionTask<f64>, mode: Mode, rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
        if mode == Mode::Ideal {
            let out = run_ideal(task)?;
            return score(task, Density::pure(&out.output), out.success_probability);
        }
        self.finish_trial(task, &self.readout_state(task, mode)?, rng)
    }

    /// Mean and spread over `n_trials` trials. Trial `t` draws from the
    /// ChaCha8 stream `t` of the noise model's seed, so results do not
    /// depend on thread scheduling.
    pub fn monte_carlo(&self, task: &SuperpositionTask<f64>, n_trials: usize, mode: Mode) -> Result<TrialStatistics> {
        if n_trials == 0 {
            return Err(Error::InvalidArgument("at least one trial is needed".into()));
        }
        let readout = if mode == Mode::Ideal {
            None
        } else {
            Some(self.readout_state(task, mode)?)
        };
        let outcomes: Vec<Result<Option<TrialOutcome>>> = (0..n_trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.noise.seed);
                rng.set_stream(t as u64);
                let r = match &readout {
                    Some(state) => self.finish_trial(task, state, &mut rng),
                    None => self.run_trial(task, mode, &mut rng),
                };
                match r {
                    Ok(o) => Ok(Some(o)),
                    Err(Error::PostSelectionFailed(_)) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect();
        let mut ok = Vec::with_capacity(n_trials);
        for o in outcomes {
            if let Some(o) = o? {
                ok.push(o);
            }
        }
        if ok.is_empty() {
            return Err(Error::AllTrialsFailed(n_trials));
        }
        let (mean_fidelity, std_fidelity) = mean_std(ok.iter().map(|o| o.fidelity));
        let (mean_overlap, std_overlap) = mean_std(ok.iter().map(|o| o.overlap));
        let (mean_success_probability, _) = mean_std(ok.iter().map(|o| o.success_probability));
        Ok(TrialStatistics {
            mean_fidelity,
            std_fidelity,
            mean_overlap,
            std_overlap,
            mean_success_probability,
            n_trials: ok.len(),
            failed_trials: n_trials - ok.len(),
        })
    }

    /// [`Lab::monte_carlo`] for one point of an experiment group.
    pub fn monte_carlo_group(&self, group: Group, theta: f64, n_trials: usize, mode: Mode) -> Result<TrialStatistics> {
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::InvalidArgument(format!("theta {theta} outside [0, π]")));
        }
        self.monte_carlo(&group_task(group, theta), n_trials, mode)
    }
}

fn score(task: &SuperpositionTask<f64>, output: Density<f64>, success_probability: f64) -> Result<TrialOutcome> {
    let target = Density::pure(&analytic_superposition(task)?);
    let fid = fidelity(&target, &output)?;
    let p1 = Density::pure(task.phi1());
    let overlap = output.matrix().trace_product(p1.matrix()).re / output.trace();
    Ok(TrialOutcome {
        fidelity: fid,
        success_probability,
        overlap,
        output,
    })
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// `I/d + Δ̂` where `Δ̂` is the deviation rescaled to the norm of a pure
/// state's deviation, so a perfect pseudo-pure deviation maps to `|0…0⟩⟨0…0|`.
fn physical_from_deviation(dev: &Density<f64>) -> Result<Density<f64>> {
    let d = dev.dim() as f64;
    let norm2 = dev.purity();
    if norm2 <= f64::MIN_POSITIVE {
        return Err(Error::ZeroPurity);
    }
    let s = ((d - 1.0) / d / norm2).sqrt();
    let m = &Matrix::identity(dev.dim()).scale_real(1.0 / d) + &dev.matrix().scale_real(s);
    Ok(Density::unchecked(m, DensityKind::Physical))
}

/// `exp(-i s H) U` with `H` a seeded random Hermitian of unit spectral norm.
fn perturbed(u: &Operator<f64>, strength: f64, seed: u64) -> Result<Operator<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = u.dim();
    let a = Matrix::from_fn(d, |_, _| {
        Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    });
    let h = (&a + &a.adjoint()).scale_real(0.5);
    let (vals, _) = h.eigh();
    let norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let h = Operator::new(h.scale_real(1.0 / norm))?;
    Ok(evolve(&h, strength)?.compose(u))
}

/// Task with `χ = |0⟩`, `ν = |+⟩`, `φ1 = o1|0⟩ + √(1−o1²)|1⟩` and
/// `φ2 = o2|0⟩ + i√(1−o2²)|1⟩`, so `|⟨φ_i|χ⟩| = o_i`. The column `o1 = 1`
/// coincides with experiment group B.
pub fn uncertainty_task(o1: f64, o2: f64) -> Result<SuperpositionTask<f64>> {
    for o in [o1, o2] {
        if !(o > 0.0 && o <= 1.0) {
            return Err(Error::InvalidArgument(format!("overlap {o} outside (0, 1]")));
        }
    }
    let phi1 = Ket::new(vec![Complex64::new(o1, 0.0), Complex64::new((1.0 - o1 * o1).max(0.0).sqrt(), 0.0)])?;
    let phi2 = Ket::new(vec![Complex64::new(o2, 0.0), Complex64::new(0.0, (1.0 - o2 * o2).max(0.0).sqrt())])?;
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    SuperpositionTask::new(phi1, phi2, Ket::zero(), h, h)
}

/// Monte-Carlo statistics over an overlap grid: `out[i][j]` is for
/// `(overlap1_grid[i], overlap2_grid[j])`.
pub fn uncertainty_map(
    lab: &Lab,
    overlap1_grid: &[f64],
    overlap2_grid: &[f64],
    n_trials: usize,
    mode: Mode,
) -> Result<Vec<Vec<TrialStatistics>>> {
    overlap1_grid
        .iter()
        .map(|&o1| {
            overlap2_grid
                .iter()
                .map(|&o2| lab.monte_carlo(&uncertainty_task(o1, o2)?, n_trials, mode))
                .collect()
        })
        .collect()
}

/// Paired group-B statistics with and without the echo emulation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EchoRow {
    pub theta: f64,
    pub with_echo: TrialStatistics,
    pub no_echo: TrialStatistics,
}

pub fn echo_comparison(lab: &Lab, theta_grid: &[f64], n_trials: usize) -> Result<Vec<EchoRow>> {
    theta_grid
        .iter()
        .map(|&theta| {
            Ok(EchoRow {
                theta,
                with_echo: lab.monte_carlo_group(Group::B, theta, n_trials, Mode::WithEcho)?,
                no_echo: lab.monte_carlo_group(Group::B, theta, n_trials, Mode::NoEcho)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_noise() -> NoiseModel {
        NoiseModel {
            coherent_error: CoherentError::Perturbation { strength: 0.02 },
            ..NoiseModel::default()
        }
    }

    #[test]
    fn noiseless_pipeline_matches_ideal_protocol() {
        let lab = Lab::new(&Molecule::tce(), &NoiseModel::noiseless()).unwrap();
        for group in [Group::A, Group::B] {
            for theta in crate::protocol::theta_grid::<f64>() {
                let task = group_task(group, theta);
                for mode in [Mode::WithEcho, Mode::NoEcho] {
                    let mut rng = ChaCha8Rng::seed_from_u64(0);
                    let out = lab.run_trial(&task, mode, &mut rng).unwrap();
                    assert!(out.fidelity > 1.0 - 1e-6, "{group} {theta} {mode}: {}", out.fidelity);
                    let ideal = run_ideal(&task).unwrap();
                    let dp = (out.success_probability - ideal.success_probability).abs();
                    assert!(dp < 1e-6, "{} vs {}", out.success_probability, ideal.success_probability);
                }
            }
        }
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let lab = Lab::new(&Molecule::tce(), &quick_noise()).unwrap();
        let a = lab.monte_carlo_group(Group::B, 0.5, 40, Mode::WithEcho).unwrap();
        let b = lab.monte_carlo_group(Group::B, 0.5, 40, Mode::WithEcho).unwrap();
        assert_eq!(a, b);
        assert!(a.std_fidelity > 0.0);
    }

    #[test]
    fn noiseless_statistics_have_no_spread() {
        let lab = Lab::new(&Molecule::tce(), &NoiseModel::noiseless()).unwrap();
        let s = lab.monte_carlo_group(Group::A, 1.0, 20, Mode::WithEcho).unwrap();
        assert!(s.std_fidelity <= 1e-9);
        assert_eq!(s.failed_trials, 0);
    }

    #[test]
    fn echo_costs_fidelity() {
        let lab = Lab::new(&Molecule::tce(), &quick_noise()).unwrap();
        let rows = echo_comparison(&lab, &[0.0, 1.5], 30).unwrap();
        let gap: f64 = rows
            .iter()
            .map(|r| r.no_echo.mean_fidelity - r.with_echo.mean_fidelity)
            .sum();
        assert!(gap >= 0.0);
    }

    #[test]
    fn uncertainty_task_realizes_overlaps() {
        let t = uncertainty_task(0.3, 0.7).unwrap();
        assert!((t.overlap1().norm() - 0.3).abs() < 1e-12);
        assert!((t.overlap2().norm() - 0.7).abs() < 1e-12);
        assert!(uncertainty_task(0.0, 0.5).is_err());
        let b = group_task::<f64>(Group::B, 1.2);
        let u = uncertainty_task(1.0, (0.6f64).cos()).unwrap();
        assert!(b.phi2().distance_up_to_phase(u.phi2()) < 1e-12);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [Mode::Ideal, Mode::WithEcho, Mode::NoEcho] {
            assert_eq!(m.to_string().parse::<Mode>().unwrap(), m);
        }
        assert!("echo".parse::<Mode>().is_err());
    }
}
