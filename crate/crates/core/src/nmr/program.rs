use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grape::{segment_propagators, ControlPulse};
use crate::linalg::Matrix;
use crate::noise::{apply_relaxation, NoiseModel, RELAXATION_STEP_S};
use crate::qcore::{evolve, Axis, Density, DensityKind, Operator};

use super::{crusher, internal_hamiltonian, Molecule};

/// One step of a pulse program.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Event {
    /// Instantaneous `exp(-i angle σ/2)` on one qubit.
    IdealRotation { qubit: usize, axis: Axis, angle: f64 },
    ShapedPulse { pulse: ControlPulse },
    /// Evolution under the internal Hamiltonian.
    FreeEvolution { duration_s: f64 },
    /// z-gradient spatial average.
    Crusher,
    /// Instantaneous π_x pulses on a set of qubits.
    PiRefocus { qubits: Vec<usize> },
}

/// Ordered list of events applied to a density operator.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PulseProgram {
    events: Vec<Event>,
}

impl PulseProgram {
    pub fn new(events: Vec<Event>) -> Result<Self> {
        for e in &events {
            match e {
                Event::IdealRotation { angle, .. } if !angle.is_finite() => {
                    return Err(Error::InvalidProgram(format!("rotation angle {angle}")));
                }
                Event::FreeEvolution { duration_s } if !(*duration_s >= 0.0 && duration_s.is_finite()) => {
                    return Err(Error::InvalidProgram(format!("free evolution of {duration_s} s")));
                }
                Event::ShapedPulse { pulse } => pulse.validate()?,
                Event::PiRefocus { qubits } => {
                    let mut q = qubits.clone();
                    q.sort_unstable();
                    if q.windows(2).any(|w| w[0] == w[1]) {
                        return Err(Error::InvalidProgram("refocusing set lists a qubit twice".into()));
                    }
                }
                _ => {}
            }
        }
        Ok(Self { events })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let events: Vec<Event> = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::new(events)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("program serializes")
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn crusher_count(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, Event::Crusher)).count()
    }

    /// Time spent in free evolution and shaped pulses.
    pub fn duration_s(&self) -> f64 {
        self.events
            .iter()
            .map(|e| match e {
                Event::FreeEvolution { duration_s } => *duration_s,
                Event::ShapedPulse { pulse } => pulse.duration_s(),
                _ => 0.0,
            })
            .sum()
    }

    /// Checks qubit indices and pulse channels against a molecule.
    pub fn validate_for(&self, mol: &Molecule) -> Result<()> {
        let n = mol.n_spins();
        let check = |q: usize| {
            if q >= n {
                Err(Error::InvalidProgram(format!("qubit {q} out of range for {n} spins")))
            } else {
                Ok(())
            }
        };
        for e in &self.events {
            match e {
                Event::IdealRotation { qubit, .. } => check(*qubit)?,
                Event::PiRefocus { qubits } => qubits.iter().try_for_each(|&q| check(q))?,
                Event::ShapedPulse { pulse } => pulse.validate_for(mol, f64::INFINITY)?,
                _ => {}
            }
        }
        Ok(())
    }
}

fn pi_refocus(qubits: &[usize], n: usize) -> Result<Operator<f64>> {
    qubits.iter().try_fold(Operator::identity(n), |acc, &q| {
        Ok(Operator::embed(&Operator::rotation(Axis::X, std::f64::consts::PI), q, n)?.compose(&acc))
    })
}

/// Unitary of a crusher-free event list, noiselessly.
pub(crate) fn events_unitary(events: &[Event], mol: &Molecule) -> Result<Matrix<f64>> {
    let n = mol.n_spins();
    let h = internal_hamiltonian(mol);
    let mut u = Matrix::identity(1 << n);
    for e in events {
        let step = match e {
            Event::IdealRotation { qubit, axis, angle } => {
                Operator::embed(&Operator::rotation(*axis, *angle), *qubit, n)?.into_matrix()
            }
            Event::FreeEvolution { duration_s } => evolve(&h, *duration_s)?.into_matrix(),
            Event::PiRefocus { qubits } => pi_refocus(qubits, n)?.into_matrix(),
            Event::ShapedPulse { pulse } => segment_propagators(pulse, mol)?
                .into_iter()
                .fold(Matrix::identity(1 << n), |acc, s| &s * &acc),
            Event::Crusher => return Err(Error::InvalidProgram("crusher is not unitary".into())),
        };
        u = &step * &u;
    }
    Ok(u)
}

/// Applies the program's events in order.
///
/// With an enabled relaxation model, relaxation is interleaved with free
/// evolution and shaped pulses in steps of at most 1 ms; it needs a
/// physical (unit-trace) state because the relaxation channels are not
/// unital.
pub fn evolve_program(
    rho: &Density<f64>,
    program: &PulseProgram,
    mol: &Molecule,
    noise: Option<&NoiseModel>,
) -> Result<Density<f64>> {
    program.validate_for(mol)?;
    let n = mol.n_spins();
    if rho.n_qubits() != n {
        return Err(Error::Dimension {
            expected: 1 << n,
            found: rho.dim(),
        });
    }
    let relax = noise.map(|m| m.relaxation_times(mol)).transpose()?.flatten();
    if relax.is_some() && rho.kind() != DensityKind::Physical {
        return Err(Error::InvalidArgument(
            "relaxation acts on physical states; convert the deviation first".into(),
        ));
    }
    let h = internal_hamiltonian(mol);
    let mut state = rho.clone();
    for e in program.events() {
        state = match e {
            Event::IdealRotation { qubit, axis, angle } => {
                state.conjugate(&Operator::embed(&Operator::rotation(*axis, *angle), *qubit, n)?)
            }
            Event::PiRefocus { qubits } => state.conjugate(&pi_refocus(qubits, n)?),
            Event::Crusher => crusher(&state),
            Event::FreeEvolution { duration_s } => match &relax {
                None => state.conjugate(&evolve(&h, *duration_s)?),
                Some(times) => {
                    let steps = (duration_s / RELAXATION_STEP_S).ceil().max(1.0) as usize;
                    let dt = duration_s / steps as f64;
                    let u = evolve(&h, dt)?;
                    for _ in 0..steps {
                        state = apply_relaxation(&state.conjugate(&u), dt, times)?;
                    }
                    state
                }
            },
            Event::ShapedPulse { pulse } => {
                let segs = segment_propagators(pulse, mol)?;
                let d = 1 << n;
                match &relax {
                    None => {
                        let u = segs.iter().fold(Matrix::identity(d), |acc, s| s * &acc);
                        state.conjugate(&Operator::unitary_with(u, &crate::Tolerances { unitary: 1e-8, ..Default::default() })?)
                    }
                    Some(times) => {
                        // Group whole segments into chunks no longer than the relaxation step.
                        let per_chunk = if pulse.dt_s > 0.0 {
                            ((RELAXATION_STEP_S / pulse.dt_s).floor() as usize).max(1)
                        } else {
                            segs.len().max(1)
                        };
                        for chunk in segs.chunks(per_chunk) {
                            let u = chunk.iter().fold(Matrix::identity(d), |acc, s| s * &acc);
                            let u = Operator::unitary_with(u, &crate::Tolerances { unitary: 1e-8, ..Default::default() })?;
                            state = apply_relaxation(&state.conjugate(&u), chunk.len() as f64 * pulse.dt_s, times)?;
                        }
                        state
                    }
                }
            }
        };
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{partial_trace, Ket};

    #[test]
    fn json_round_trip() {
        let p = PulseProgram::new(vec![
            Event::IdealRotation { qubit: 1, axis: Axis::Y, angle: 0.5 },
            Event::FreeEvolution { duration_s: 1e-3 },
            Event::PiRefocus { qubits: vec![0, 2] },
            Event::Crusher,
        ])
        .unwrap();
        assert_eq!(PulseProgram::from_json(&p.to_json()).unwrap(), p);
        assert_eq!(p.crusher_count(), 1);
        assert!((p.duration_s() - 1e-3).abs() < 1e-18);
        assert!(PulseProgram::new(vec![Event::FreeEvolution { duration_s: -1.0 }]).is_err());
    }

    #[test]
    fn out_of_range_qubit_is_rejected() {
        let mol = Molecule::tce();
        let p = PulseProgram::new(vec![Event::IdealRotation { qubit: 3, axis: Axis::X, angle: 1.0 }]).unwrap();
        let rho = Density::maximally_mixed(3);
        assert!(evolve_program(&rho, &p, &mol, None).is_err());
    }

    #[test]
    fn relaxation_needs_physical_state() {
        let mol = Molecule::tce();
        let p = PulseProgram::new(vec![Event::FreeEvolution { duration_s: 1e-3 }]).unwrap();
        let dev = super::super::thermal_deviation(&mol);
        assert!(evolve_program(&dev, &p, &mol, Some(&NoiseModel::default())).is_err());
        let rho = Density::pure(&Ket::basis(3, 0));
        let out = evolve_program(&rho, &p, &mol, Some(&NoiseModel::default())).unwrap();
        assert!((out.trace() - 1.0).abs() < 1e-12);
        assert!(partial_trace(&out, &[0]).is_ok());
    }
}
