use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One nuclear spin of the register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spin {
    /// Label such as `H` or `C2`; the leading letters name the species,
    /// which selects the RF channel driving this spin.
    pub name: String,
    /// Offset from the species' rotating-frame carrier, in Hz.
    pub shift_hz: f64,
    pub t1_s: f64,
    pub t2_s: f64,
    /// Gyromagnetic ratio relative to the reference species.
    pub gyro_rel: f64,
}

impl Spin {
    pub fn species(&self) -> &str {
        let end = self
            .name
            .find(|ch: char| !ch.is_ascii_alphabetic())
            .unwrap_or(self.name.len());
        &self.name[..end]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `σz σz` (secular) coupling.
    Weak,
    /// Full isotropic exchange `σ·σ`.
    Strong,
}

/// Scalar coupling between spins `i` and `j` (0-based).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub j_hz: f64,
    pub regime: Regime,
}

/// A liquid-state NMR spin system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Molecule {
    pub spins: Vec<Spin>,
    pub couplings: Vec<Coupling>,
}

impl Molecule {
    /// Validates and builds a molecule.
    pub fn new(spins: Vec<Spin>, couplings: Vec<Coupling>) -> Result<Self> {
        let m = Self { spins, couplings };
        m.validate()?;
        Ok(m)
    }

    /// Parses and validates a JSON description.
    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("molecule serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.spins.is_empty() {
            return Err(Error::InvalidMolecule("no spins".into()));
        }
        for s in &self.spins {
            if s.species().is_empty() {
                return Err(Error::InvalidMolecule(format!(
                    "spin name {:?} must start with a species letter",
                    s.name
                )));
            }
            if !s.shift_hz.is_finite() || !s.gyro_rel.is_finite() || s.gyro_rel == 0.0 {
                return Err(Error::InvalidMolecule(format!(
                    "spin {}: shift and gyro ratio must be finite, gyro nonzero",
                    s.name
                )));
            }
            if !(s.t2_s > 0.0 && s.t1_s >= s.t2_s) {
                return Err(Error::RelaxationOrder {
                    t1: s.t1_s,
                    t2: s.t2_s,
                });
            }
        }
        let n = self.spins.len();
        let mut seen = std::collections::HashSet::new();
        for c in &self.couplings {
            if c.i >= n || c.j >= n || c.i == c.j {
                return Err(Error::InvalidMolecule(format!(
                    "coupling ({}, {}) must join two distinct spins of {n}",
                    c.i, c.j
                )));
            }
            if !c.j_hz.is_finite() {
                return Err(Error::InvalidMolecule("non-finite coupling".into()));
            }
            if !seen.insert((c.i.min(c.j), c.i.max(c.j))) {
                return Err(Error::InvalidMolecule(format!(
                    "coupling ({}, {}) listed twice",
                    c.i, c.j
                )));
            }
        }
        Ok(())
    }

    pub fn n_spins(&self) -> usize {
        self.spins.len()
    }

    /// Coupling constant between two spins in Hz (0 if absent).
    pub fn j_hz(&self, a: usize, b: usize) -> f64 {
        self.couplings
            .iter()
            .find(|c| (c.i == a && c.j == b) || (c.i == b && c.j == a))
            .map_or(0.0, |c| c.j_hz)
    }

    /// Copy with the coupling between `a` and `b` replaced.
    pub fn with_coupling(&self, a: usize, b: usize, j_hz: f64) -> Result<Self> {
        let mut m = self.clone();
        match m
            .couplings
            .iter_mut()
            .find(|c| (c.i == a && c.j == b) || (c.i == b && c.j == a))
        {
            Some(c) => c.j_hz = j_hz,
            None => m.couplings.push(Coupling {
                i: a,
                j: b,
                j_hz,
                regime: Regime::Weak,
            }),
        }
        m.validate()?;
        Ok(m)
    }

    /// Distinct species in order of first appearance.
    pub fn species(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.spins {
            if !out.iter().any(|x| x == s.species()) {
                out.push(s.species().to_string());
            }
        }
        out
    }

    /// Trichloroethylene-like three-spin register in qubit order H, C2, C1.
    ///
    /// Only the carbon frequency difference (1250 Hz) and the carbon-carbon
    /// coupling (100 Hz, strong) are anchored; the proton offset, the H–C
    /// couplings and all relaxation times are representative placeholders.
    pub fn tce() -> Self {
        let spin = |name: &str, shift_hz, t1_s, t2_s, gyro_rel| Spin {
            name: name.into(),
            shift_hz,
            t1_s,
            t2_s,
            gyro_rel,
        };
        Self {
            spins: vec![
                spin("H", 0.0, 5.0, 1.5, 4.0),
                spin("C2", 625.0, 20.0, 1.0, 1.0),
                spin("C1", -625.0, 20.0, 1.0, 1.0),
            ],
            couplings: vec![
                Coupling { i: 0, j: 1, j_hz: 9.0, regime: Regime::Weak },
                Coupling { i: 0, j: 2, j_hz: 200.0, regime: Regime::Weak },
                Coupling { i: 1, j: 2, j_hz: 100.0, regime: Regime::Strong },
            ],
        }
    }
}
