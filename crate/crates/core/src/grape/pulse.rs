use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nmr::Molecule;
use crate::qcore::{pauli_string, Axis};

/// Default amplitude ceiling, 2π·10 kHz.
pub const DEFAULT_MAX_AMPLITUDE: f64 = 2.0 * std::f64::consts::PI * 10e3;

/// Piecewise-constant RF waveform.
///
/// Channel names are `<species>_x` / `<species>_y`; a channel drives every
/// spin of that species with the spin-½ operator `σ/2`, so an amplitude `u`
/// (rad/s) nutates a spin at `u` radians per second.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlPulse {
    pub dt_s: f64,
    pub channels: Vec<String>,
    /// `amplitudes[channel][segment]` in rad/s.
    pub amplitudes: Vec<Vec<f64>>,
}

impl ControlPulse {
    pub fn new(dt_s: f64, channels: Vec<String>, amplitudes: Vec<Vec<f64>>) -> Result<Self> {
        let p = Self {
            dt_s,
            channels,
            amplitudes,
        };
        p.validate()?;
        Ok(p)
    }

    /// All-zero pulse on the molecule's standard channels.
    pub fn zeros(mol: &Molecule, segment_count: usize, dt_s: f64) -> Result<Self> {
        let channels = standard_channels(mol);
        let amplitudes = vec![vec![0.0; segment_count]; channels.len()];
        Self::new(dt_s, channels, amplitudes)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("pulse serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_s >= 0.0 && self.dt_s.is_finite()) {
            return Err(Error::InvalidPulse(format!("segment duration {}", self.dt_s)));
        }
        if self.amplitudes.len() != self.channels.len() {
            return Err(Error::InvalidPulse(format!(
                "{} amplitude rows for {} channels",
                self.amplitudes.len(),
                self.channels.len()
            )));
        }
        let n = self.segment_count();
        if self.amplitudes.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidPulse("ragged amplitude rows".into()));
        }
        if self.amplitudes.iter().flatten().any(|a| !a.is_finite()) {
            return Err(Error::InvalidPulse("non-finite amplitude".into()));
        }
        for ch in &self.channels {
            parse_channel(ch)?;
        }
        Ok(())
    }

    /// Checks the pulse against a molecule and an amplitude ceiling.
    pub fn validate_for(&self, mol: &Molecule, max_amplitude: f64) -> Result<()> {
        self.validate()?;
        for ch in &self.channels {
            let (species, _) = parse_channel(ch)?;
            if !mol.spins.iter().any(|s| s.species() == species) {
                return Err(Error::InvalidPulse(format!("channel {ch} drives no spin")));
            }
        }
        let peak = self.max_amplitude();
        if peak > max_amplitude * (1.0 + 1e-12) {
            return Err(Error::InvalidPulse(format!(
                "amplitude {peak:.3e} rad/s exceeds ceiling {max_amplitude:.3e}"
            )));
        }
        Ok(())
    }

    pub fn segment_count(&self) -> usize {
        self.amplitudes.first().map_or(0, Vec::len)
    }

    pub fn duration_s(&self) -> f64 {
        self.segment_count() as f64 * self.dt_s
    }

    pub fn max_amplitude(&self) -> f64 {
        self.amplitudes.iter().flatten().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Same waveform with every amplitude multiplied by `scale`.
    pub fn scaled(&self, scale: f64) -> Self {
        Self {
            dt_s: self.dt_s,
            channels: self.channels.clone(),
            amplitudes: self
                .amplitudes
                .iter()
                .map(|row| row.iter().map(|a| a * scale).collect())
                .collect(),
        }
    }

    /// Same waveform with each segment split into `factor` equal pieces.
    pub fn refined(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        Self {
            dt_s: self.dt_s / factor as f64,
            channels: self.channels.clone(),
            amplitudes: self
                .amplitudes
                .iter()
                .map(|row| row.iter().flat_map(|&a| std::iter::repeat_n(a, factor)).collect())
                .collect(),
        }
    }

    /// The segments `[start, end)` as a pulse of their own.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            dt_s: self.dt_s,
            channels: self.channels.clone(),
            amplitudes: self.amplitudes.iter().map(|row| row[start..end].to_vec()).collect(),
        }
    }
}

/// `x` and `y` channels for every species, in order of first appearance.
pub fn standard_channels(mol: &Molecule) -> Vec<String> {
    mol.species()
        .into_iter()
        .flat_map(|s| [format!("{s}_x"), format!("{s}_y")])
        .collect()
}

fn parse_channel(name: &str) -> Result<(&str, Axis)> {
    let bad = || Error::InvalidPulse(format!("channel name {name:?} is not <species>_x|y"));
    let (species, axis) = name.rsplit_once('_').ok_or_else(bad)?;
    let axis = match axis {
        "x" => Axis::X,
        "y" => Axis::Y,
        _ => return Err(bad()),
    };
    if species.is_empty() {
        return Err(bad());
    }
    Ok((species, axis))
}

/// Control Hamiltonian (per unit amplitude) of a named channel.
pub fn control_hamiltonian(mol: &Molecule, channel: &str) -> Result<Matrix<f64>> {
    let (species, axis) = parse_channel(channel)?;
    let n = mol.n_spins();
    let mut h = Matrix::zeros(1 << n);
    let mut any = false;
    for (q, s) in mol.spins.iter().enumerate() {
        if s.species() == species {
            let mut f = vec![None; n];
            f[q] = Some(axis);
            h = &h + &pauli_string::<f64>(&f).scale_real(0.5);
            any = true;
        }
    }
    if !any {
        return Err(Error::InvalidPulse(format!("channel {channel} drives no spin")));
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channels_and_json() {
        let mol = Molecule::tce();
        assert_eq!(standard_channels(&mol), ["H_x", "H_y", "C_x", "C_y"]);
        let p = ControlPulse::zeros(&mol, 3, 1e-5).unwrap();
        assert_eq!(ControlPulse::from_json(&p.to_json()).unwrap(), p);
        assert!(ControlPulse::new(1e-5, vec!["H_z".into()], vec![vec![0.0]]).is_err());
        assert!(ControlPulse::new(-1.0, vec![], vec![]).is_err());
    }

    #[test]
    fn carbon_channel_drives_both_carbons() {
        let mol = Molecule::tce();
        let h = control_hamiltonian(&mol, "C_x").unwrap();
        // ⟨000| (σx²+σx³)/2 |010⟩ and |001⟩ entries.
        assert!((h[(0, 2)].re - 0.5).abs() < 1e-15);
        assert!((h[(0, 1)].re - 0.5).abs() < 1e-15);
        assert!(h[(0, 4)].norm() < 1e-15);
    }

    #[test]
    fn refine_keeps_duration() {
        let mol = Molecule::tce();
        let mut p = ControlPulse::zeros(&mol, 4, 1e-5).unwrap();
        p.amplitudes[0] = vec![1.0, 2.0, 3.0, 4.0];
        let r = p.refined(2);
        assert_eq!(r.segment_count(), 8);
        assert!((r.duration_s() - p.duration_s()).abs() < 1e-18);
        assert_eq!(r.amplitudes[0][..4], [1.0, 1.0, 2.0, 2.0]);
    }
}
