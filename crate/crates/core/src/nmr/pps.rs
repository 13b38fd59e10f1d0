//! Pseudo-pure state preparation by spatial averaging.
//!
//! The canned sequence has three blocks, each made of local rotations, a
//! refocused J-evolution of length `1/(2J)` between two spins, local
//! rotations and a crusher. Starting from analytic weak-coupling angles, the
//! local rotations are calibrated numerically for the given molecule, which
//! absorbs strong-coupling and passive-coupling errors.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::optim::{maximize, AscentOptions};
use crate::qcore::{Axis, Density, DensityKind, Operator};

use super::program::events_unitary;
use super::{crusher, evolve_program, thermal_deviation, Event, Molecule, PulseProgram};

/// Fidelity below which a preparation is reported as a failure.
pub const PPS_FIDELITY_FLOOR: f64 = 0.99;

/// Result of a preparation run.
#[derive(Clone, Debug, PartialEq)]
pub struct PpsReport {
    /// Deviation operator after the program.
    pub state: Density<f64>,
    /// Correlation with the `|0…0⟩` pseudo-pure deviation.
    pub fidelity: f64,
    pub duration_s: f64,
}

/// `|0…0⟩⟨0…0| − I/d` as a deviation operator.
pub fn pps_target(n_qubits: usize) -> Density<f64> {
    let d = 1usize << n_qubits;
    let mut m = Matrix::identity(d).scale_real(-1.0 / d as f64);
    m[(0, 0)] += Complex64::new(1.0, 0.0);
    Density::unchecked(m, DensityKind::Deviation)
}

/// `tr(AB) / sqrt(tr(A²) tr(B²))` for deviation (or any Hermitian)
/// operators; insensitive to the overall polarization scale.
pub fn deviation_fidelity(a: &Density<f64>, b: &Density<f64>) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let (pa, pb) = (a.purity(), b.purity());
    if pa <= f64::MIN_POSITIVE || pb <= f64::MIN_POSITIVE {
        return Err(Error::ZeroPurity);
    }
    Ok(a.matrix().trace_product(b.matrix()).re / (pa * pb).sqrt())
}

/// Runs a preparation program on the thermal deviation without noise.
///
/// An empty program is a diagnostic: the raw thermal fidelity is reported
/// and no threshold applies. Otherwise the program must contain exactly
/// three crushers and reach [`PPS_FIDELITY_FLOOR`].
pub fn pps_prepare(mol: &Molecule, program: &PulseProgram) -> Result<PpsReport> {
    let thermal = thermal_deviation(mol);
    let target = pps_target(mol.n_spins());
    if program.is_empty() {
        return Ok(PpsReport {
            fidelity: deviation_fidelity(&thermal, &target)?,
            state: thermal,
            duration_s: 0.0,
        });
    }
    if program.crusher_count() != 3 {
        return Err(Error::InvalidProgram(format!(
            "preparation needs exactly three crushers, found {}",
            program.crusher_count()
        )));
    }
    let state = evolve_program(&thermal, program, mol, None)?;
    let fidelity = deviation_fidelity(&state, &target)?;
    if fidelity < PPS_FIDELITY_FLOOR {
        return Err(Error::PpsFidelity {
            achieved: fidelity,
            required: PPS_FIDELITY_FLOOR,
        });
    }
    Ok(PpsReport {
        state,
        fidelity,
        duration_s: program.duration_s(),
    })
}

/// Euler angles `(a, b, c)` of `Rz(a) Ry(b) Rz(c)` per block, pre/post, spin.
type Angles = [[[[f64; 3]; 3]; 2]; 3];

const N_ANGLES: usize = 3 * 2 * 3 * 3;

struct Template {
    /// (target, control) spin of each block's J-evolution.
    pairs: [(usize, usize); 3],
    /// Spin whose polarization is discarded in the first block.
    killed: usize,
    j_events: Vec<Vec<Event>>,
    j_unitaries: Vec<Matrix<f64>>,
}

impl Template {
    fn new(mol: &Molecule) -> Result<Self> {
        if mol.n_spins() != 3 {
            return Err(Error::InvalidMolecule(
                "the canned preparation sequence is defined for three spins".into(),
            ));
        }
        // The first block uses spin 0's strongest coupling.
        let (hub, other) = if mol.j_hz(0, 1).abs() >= mol.j_hz(0, 2).abs() { (1, 2) } else { (2, 1) };
        let pairs = [(0, hub), (hub, other), (other, hub)];
        let mut j_events = Vec::new();
        let mut j_unitaries = Vec::new();
        for &(k, j) in &pairs {
            let coupling = mol.j_hz(k, j);
            if coupling == 0.0 {
                return Err(Error::InvalidMolecule(format!("spins {k} and {j} are not coupled")));
            }
            let events = j_evolution(k, j, 1.0 / (2.0 * coupling.abs()));
            j_unitaries.push(events_unitary(&events, mol)?);
            j_events.push(events);
        }
        Ok(Self {
            pairs,
            killed: other,
            j_events,
            j_unitaries,
        })
    }

    /// Weak-coupling design for a 4:1:1 thermal state: each block rotates
    /// the target by `θ` about y, evolves, then rotates it by `α` about x.
    fn initial_angles(&self) -> Angles {
        let mut p = [[[[0.0; 3]; 3]; 2]; 3];
        let half_pi = std::f64::consts::FRAC_PI_2;
        for (b, &(k, _)) in self.pairs.iter().enumerate() {
            let (cc, ss) = [(1.0 / 12.0, 0.25), (1.0 / 3.0, 2.0 / 3.0), (0.5, 0.5)][b];
            let diff = f64::acos(cc + ss);
            let sum = f64::acos(cc - ss);
            let theta = 0.5 * (sum + diff);
            let alpha = 0.5 * (sum - diff);
            p[b][0][k] = [0.0, theta, 0.0];
            p[b][1][k] = [-half_pi, alpha, half_pi];
        }
        p[0][0][self.killed] = [-half_pi, half_pi, half_pi];
        p
    }

    fn evaluate(&self, angles: &Angles, thermal: &Density<f64>, target: &Density<f64>) -> f64 {
        let mut rho = thermal.clone();
        for b in 0..3 {
            rho = rho.conjugate(&local_unitary(&angles[b][0]));
            rho = rho.conjugate(&Operator::unitary_with(
                self.j_unitaries[b].clone(),
                &crate::Tolerances { unitary: 1e-8, ..Default::default() },
            ).expect("unitary"));
            rho = rho.conjugate(&local_unitary(&angles[b][1]));
            rho = crusher(&rho);
        }
        deviation_fidelity(&rho, target).unwrap_or(0.0)
    }

    fn program(&self, angles: &Angles) -> Result<PulseProgram> {
        let mut events = Vec::new();
        for b in 0..3 {
            push_euler(&mut events, &angles[b][0]);
            events.extend(self.j_events[b].iter().cloned());
            push_euler(&mut events, &angles[b][1]);
            events.push(Event::Crusher);
        }
        PulseProgram::new(events)
    }
}

/// Refocused J-evolution between `k` and `j` of total length `t`: the third
/// spin's couplings are echoed away and the chemical shifts refocus over the
/// two whole-register π pulses.
fn j_evolution(k: usize, j: usize, t: f64) -> Vec<Event> {
    let third = 3 - k - j;
    let tau = t / 4.0;
    let mut out = Vec::new();
    for qubits in [vec![third], vec![0, 1, 2], vec![third], vec![0, 1, 2]] {
        out.push(Event::FreeEvolution { duration_s: tau });
        out.push(Event::PiRefocus { qubits });
    }
    out
}

fn euler_2x2(a: f64, b: f64, c: f64) -> Operator<f64> {
    Operator::rotation(Axis::Z, a)
        .compose(&Operator::rotation(Axis::Y, b))
        .compose(&Operator::rotation(Axis::Z, c))
}

fn local_unitary(angles: &[[f64; 3]; 3]) -> Operator<f64> {
    angles
        .iter()
        .map(|&[a, b, c]| euler_2x2(a, b, c))
        .reduce(|acc, u| acc.tensor(&u))
        .expect("three spins")
}

fn push_euler(events: &mut Vec<Event>, angles: &[[f64; 3]; 3]) {
    for (qubit, &[a, b, c]) in angles.iter().enumerate() {
        for (axis, angle) in [(Axis::Z, c), (Axis::Y, b), (Axis::Z, a)] {
            if angle != 0.0 {
                events.push(Event::IdealRotation { qubit, axis, angle });
            }
        }
    }
}

fn flatten(p: &Angles) -> Vec<f64> {
    p.iter().flatten().flatten().flatten().copied().collect()
}

fn unflatten(x: &[f64]) -> Angles {
    let mut p = [[[[0.0; 3]; 3]; 2]; 3];
    for (i, v) in p.iter_mut().flatten().flatten().flatten().enumerate() {
        *v = x[i];
    }
    p
}

/// The calibrated three-block preparation sequence for a three-spin
/// molecule. Delays follow `1/(2J)` of the configured couplings.
pub fn canned_pps_program(mol: &Molecule) -> Result<PulseProgram> {
    mol.validate()?;
    let template = Template::new(mol)?;
    let thermal = thermal_deviation(mol);
    let target = pps_target(3);
    let f = |x: &[f64]| template.evaluate(&unflatten(x), &thermal, &target);
    let objective = |x: &[f64]| {
        let h = 1e-6;
        let grad: Vec<f64> = (0..N_ANGLES)
            .into_par_iter()
            .map(|i| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[i] += h;
                xm[i] -= h;
                (f(&xp) - f(&xm)) / (2.0 * h)
            })
            .collect();
        (f(x), grad)
    };
    let opts = AscentOptions {
        max_iterations: 800,
        initial_step: 0.05,
        goal: Some(1.0 - 1e-12),
        gradient_tolerance: 1e-10,
        memory: N_ANGLES,
        ..Default::default()
    };
    let result = maximize(flatten(&template.initial_angles()), objective, &opts);
    template.program(&unflatten(&result.x))
}
