//! Gradient-ascent pulse engineering (GRAPE).
//!
//! Gradients are exact: each segment propagator is differentiated through
//! its eigendecomposition, so they agree with finite differences to
//! rounding regardless of the segment length.

mod pulse;

pub use pulse::{control_hamiltonian, standard_channels, ControlPulse, DEFAULT_MAX_AMPLITUDE};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nmr::{internal_hamiltonian_matrix, Molecule};
use crate::optim::{maximize, AscentOptions, StopReason};

type Operator = crate::qcore::Operator<f64>;

/// Optimizer variables are amplitudes in units of 2π·1 kHz, which keeps the
/// problem well scaled for the quasi-Newton update.
const VARIABLE_UNIT: f64 = 2.0 * std::f64::consts::PI * 1e3;

/// `|tr(target† U)| / d`.
pub fn gate_fidelity(u: &Operator, target: &Operator) -> Result<f64> {
    if u.dim() != target.dim() {
        return Err(Error::Dimension {
            expected: target.dim(),
            found: u.dim(),
        });
    }
    for m in [u, target] {
        let err = m.matrix().unitarity_error();
        if err > 1e-8 {
            return Err(Error::NotUnitary(err));
        }
    }
    Ok(target.matrix().adjoint().trace_product(u.matrix()).norm() / u.dim() as f64)
}

/// Total propagator of the pulse under the molecule's internal Hamiltonian.
pub fn propagate(pulse: &ControlPulse, mol: &Molecule) -> Result<Operator> {
    let system = System::new(mol, pulse, 0.0)?;
    let u = system
        .segments(&pulse.amplitudes, 1.0)
        .into_iter()
        .fold(Matrix::identity(system.dim()), |acc, s| &s.u * &acc);
    Ok(Operator::unitary_with(u, &crate::Tolerances { unitary: 1e-8, ..Default::default() })?)
}

/// Per-segment propagators in time order.
pub fn segment_propagators(pulse: &ControlPulse, mol: &Molecule) -> Result<Vec<Matrix<f64>>> {
    let system = System::new(mol, pulse, 0.0)?;
    Ok(system
        .segments(&pulse.amplitudes, 1.0)
        .into_iter()
        .map(|s| s.u)
        .collect())
}

/// `∂F/∂u_c[k]` (per rad/s) of the gate fidelity, `[channel][segment]`.
pub fn grape_gradient(pulse: &ControlPulse, target: &Operator, mol: &Molecule) -> Result<Vec<Vec<f64>>> {
    let system = System::new(mol, pulse, 0.0)?;
    check_target(target, system.dim())?;
    let (_, grad) = system.fidelity_gradient(&pulse.amplitudes, 1.0, &target.matrix().adjoint());
    Ok(grad)
}

fn check_target(target: &Operator, dim: usize) -> Result<()> {
    if target.dim() != dim {
        return Err(Error::Dimension {
            expected: dim,
            found: target.dim(),
        });
    }
    let err = target.matrix().unitarity_error();
    if err > 1e-8 {
        return Err(Error::NotUnitary(err));
    }
    Ok(())
}

/// Fidelity of the pulse with all amplitudes multiplied by each scale.
pub fn rf_robustness_scan(
    pulse: &ControlPulse,
    target: &Operator,
    mol: &Molecule,
    scalings: &[f64],
) -> Result<Vec<(f64, f64)>> {
    scalings
        .iter()
        .map(|&s| {
            let u = propagate(&pulse.scaled(s), mol)?;
            Ok((s, gate_fidelity(&u, target)?))
        })
        .collect()
}

/// Weighted ensemble member: an RF scale factor or a shift offset in Hz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember {
    pub value: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub target: Operator,
    pub fidelity_goal: f64,
    pub max_iterations: usize,
    /// First line-search step, in units of 2π·1 kHz.
    pub initial_step: f64,
    pub segment_count: usize,
    pub dt_s: f64,
    pub max_amplitude: f64,
    /// RF amplitude scalings (inhomogeneity robustness).
    pub rf_ensemble: Vec<EnsembleMember>,
    /// Common offsets added to every chemical shift, Hz (drift robustness).
    pub shift_ensemble_hz: Vec<EnsembleMember>,
    /// Standard deviation of the random initial amplitudes, rad/s.
    pub initial_amplitude: f64,
    pub seed: u64,
}

impl OptimizerConfig {
    /// Defaults: 40 µs segments, goal 0.999, no ensembles.
    pub fn new(target: Operator, duration_s: f64) -> Self {
        let dt_s = 40e-6;
        let segment_count = (duration_s / dt_s).round() as usize;
        Self {
            target,
            fidelity_goal: 0.999,
            max_iterations: 1000,
            initial_step: 0.1,
            segment_count,
            dt_s: if segment_count == 0 { 0.0 } else { duration_s / segment_count as f64 },
            max_amplitude: DEFAULT_MAX_AMPLITUDE,
            rf_ensemble: vec![EnsembleMember { value: 1.0, weight: 1.0 }],
            shift_ensemble_hz: vec![EnsembleMember { value: 0.0, weight: 1.0 }],
            initial_amplitude: 2.0 * std::f64::consts::PI * 200.0,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.fidelity_goal > 0.0 && self.fidelity_goal <= 1.0) {
            return bad(format!("fidelity goal {} outside (0, 1]", self.fidelity_goal));
        }
        if !(self.dt_s >= 0.0 && self.dt_s.is_finite()) {
            return bad(format!("segment duration {}", self.dt_s));
        }
        if !(self.max_amplitude > 0.0) || !(self.initial_step > 0.0) || !(self.initial_amplitude >= 0.0) {
            return bad("amplitude ceiling, initial step and initial amplitude must be positive".into());
        }
        for (name, ens) in [("rf", &self.rf_ensemble), ("shift", &self.shift_ensemble_hz)] {
            let total: f64 = ens.iter().map(|m| m.weight).sum();
            if ens.is_empty() || ens.iter().any(|m| !(m.weight >= 0.0) || !m.value.is_finite()) || (total - 1.0).abs() > 1e-9 {
                return bad(format!("{name} ensemble weights must be non-negative and sum to 1"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub fidelity: f64,
    /// Norm of the gradient with respect to amplitudes in units of 2π·1 kHz.
    pub gradient_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizationResult {
    pub pulse: ControlPulse,
    /// Ensemble-averaged fidelity (the nominal fidelity without ensembles).
    pub fidelity: f64,
    pub log: Vec<IterationRecord>,
    pub goal_met: bool,
}

/// Gradient ascent from `initial` (or a seeded random pulse) until the goal
/// or the iteration budget is reached. Not reaching the goal is reported
/// through `goal_met`, not as an error.
pub fn optimize(config: &OptimizerConfig, mol: &Molecule, initial: Option<&ControlPulse>) -> Result<OptimizationResult> {
    config.validate()?;
    let start = match initial {
        Some(p) => {
            p.validate_for(mol, config.max_amplitude)?;
            p.clone()
        }
        None => {
            let mut p = ControlPulse::zeros(mol, config.segment_count, config.dt_s)?;
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let normal = Normal::new(0.0, config.initial_amplitude).map_err(|e| Error::InvalidArgument(e.to_string()))?;
            for row in p.amplitudes.iter_mut() {
                for a in row.iter_mut() {
                    *a = normal.sample(&mut rng).clamp(-config.max_amplitude, config.max_amplitude);
                }
            }
            p
        }
    };
    let n_channels = start.channels.len();
    let n_segments = start.segment_count();
    let members: Vec<(System, f64, f64)> = config
        .shift_ensemble_hz
        .iter()
        .filter(|m| m.weight > 0.0)
        .map(|shift| System::new(mol, &start, shift.value).map(|s| (s, shift.weight)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flat_map(|(s, w)| {
            config
                .rf_ensemble
                .iter()
                .filter(|m| m.weight > 0.0)
                .map(move |rf| (s.clone(), rf.value, w * rf.weight))
                .collect::<Vec<_>>()
        })
        .collect();
    check_target(&config.target, members[0].0.dim())?;
    let target_adj = config.target.matrix().adjoint();

    let unflatten = |x: &[f64]| -> Vec<Vec<f64>> {
        x.chunks(n_segments.max(1))
            .take(n_channels)
            .map(|row| row.iter().map(|v| v * VARIABLE_UNIT).collect())
            .collect()
    };
    let objective = |x: &[f64]| -> (f64, Vec<f64>) {
        let amps = if n_segments == 0 { vec![Vec::new(); n_channels] } else { unflatten(x) };
        let parts: Vec<(f64, Vec<Vec<f64>>)> = members
            .par_iter()
            .map(|(sys, scale, _)| sys.fidelity_gradient(&amps, *scale, &target_adj))
            .collect();
        let mut value = 0.0;
        let mut grad = vec![0.0; x.len()];
        for ((f, g), (_, _, w)) in parts.iter().zip(&members) {
            value += w * f;
            for (dst, src) in grad.iter_mut().zip(g.iter().flatten()) {
                *dst += w * src * VARIABLE_UNIT;
            }
        }
        (value, grad)
    };
    let x0: Vec<f64> = start.amplitudes.iter().flatten().map(|a| a / VARIABLE_UNIT).collect();
    let opts = AscentOptions {
        max_iterations: config.max_iterations,
        initial_step: config.initial_step,
        goal: Some(config.fidelity_goal),
        gradient_tolerance: 1e-12,
        bound: Some(config.max_amplitude / VARIABLE_UNIT),
        ..Default::default()
    };
    let result = maximize(x0, objective, &opts);
    let amplitudes = if n_segments == 0 { vec![Vec::new(); n_channels] } else { unflatten(&result.x) };
    let pulse = ControlPulse::new(start.dt_s, start.channels.clone(), amplitudes)?;
    Ok(OptimizationResult {
        pulse,
        fidelity: result.value,
        log: result
            .log
            .iter()
            .map(|r| IterationRecord {
                iteration: r.iteration,
                fidelity: r.value,
                gradient_norm: r.gradient_norm,
            })
            .collect(),
        goal_met: result.stop == StopReason::GoalReached || result.value >= config.fidelity_goal,
    })
}

/// Drift and control Hamiltonians for one ensemble member.
#[derive(Clone)]
struct System {
    drift: Matrix<f64>,
    controls: Vec<Matrix<f64>>,
    dt: f64,
}

struct Segment {
    u: Matrix<f64>,
    vecs: Matrix<f64>,
    vals: Vec<f64>,
    phases: Vec<Complex64>,
}

impl System {
    fn new(mol: &Molecule, pulse: &ControlPulse, shift_offset_hz: f64) -> Result<Self> {
        pulse.validate()?;
        let mut drift = internal_hamiltonian_matrix(mol);
        if shift_offset_hz != 0.0 {
            let d = drift.dim();
            let n = mol.n_spins();
            for i in 0..d {
                let zsum: f64 = (0..n).map(|q| if (i >> (n - 1 - q)) & 1 == 0 { 1.0 } else { -1.0 }).sum();
                drift[(i, i)] += Complex64::new(std::f64::consts::PI * shift_offset_hz * zsum, 0.0);
            }
        }
        let controls = pulse
            .channels
            .iter()
            .map(|ch| control_hamiltonian(mol, ch))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            drift,
            controls,
            dt: pulse.dt_s,
        })
    }

    fn dim(&self) -> usize {
        self.drift.dim()
    }

    fn segments(&self, amps: &[Vec<f64>], scale: f64) -> Vec<Segment> {
        let n_seg = amps.first().map_or(0, Vec::len);
        (0..n_seg)
            .map(|k| {
                let mut h = self.drift.clone();
                for (c, hc) in self.controls.iter().enumerate() {
                    let a = scale * amps[c][k];
                    if a != 0.0 {
                        h = &h + &hc.scale_real(a);
                    }
                }
                let (vals, vecs) = h.eigh();
                let phases: Vec<Complex64> = vals.iter().map(|l| Complex64::from_polar(1.0, -l * self.dt)).collect();
                let u = &(&vecs * &Matrix::from_diagonal(&phases)) * &vecs.adjoint();
                Segment { u, vecs, vals, phases }
            })
            .collect()
    }

    /// Fidelity and its exact gradient (per unit amplitude).
    fn fidelity_gradient(&self, amps: &[Vec<f64>], scale: f64, target_adj: &Matrix<f64>) -> (f64, Vec<Vec<f64>>) {
        let d = self.dim();
        let segs = self.segments(amps, scale);
        let n = segs.len();
        let mut forward = Vec::with_capacity(n + 1);
        forward.push(Matrix::identity(d));
        for s in &segs {
            let next = &s.u * forward.last().expect("non-empty");
            forward.push(next);
        }
        let g = target_adj.trace_product(&forward[n]);
        let fid = g.norm() / d as f64;
        let mut grad = vec![vec![0.0; n]; self.controls.len()];
        if g.norm() == 0.0 {
            return (fid, grad);
        }
        let mut back = target_adj.clone();
        for k in (0..n).rev() {
            let s = &segs[k];
            let vh = s.vecs.adjoint();
            // tr(B dU F) = tr(F B dU) with dU = V (Γ ∘ V†H_cV) V†.
            let m = &(&vh * &(&forward[k] * &back)) * &s.vecs;
            let gamma = Matrix::from_fn(d, |a, b| {
                let dl = s.vals[a] - s.vals[b];
                if dl.abs() > 1e-9 * (1.0 + s.vals[a].abs()) {
                    (s.phases[a] - s.phases[b]) / dl
                } else {
                    Complex64::new(0.0, -self.dt) * s.phases[a]
                }
            });
            for (c, hc) in self.controls.iter().enumerate() {
                let hp = &(&vh * hc) * &s.vecs;
                let mut dg = Complex64::new(0.0, 0.0);
                for a in 0..d {
                    for b in 0..d {
                        dg += m[(b, a)] * gamma[(a, b)] * hp[(a, b)];
                    }
                }
                grad[c][k] = scale * (g.conj() * dg).re / (g.norm() * d as f64);
            }
            back = &back * &s.u;
        }
        (fid, grad)
    }
}

#[cfg(test)]
mod tests;
