//! JSON experiment configuration.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use superpose::nmr::Molecule;
use superpose::noise::{Mode, NoiseModel};
use superpose::protocol::theta_grid;
use superpose::qcore::Axis;

use crate::CliError;

/// Which family of tasks a group run sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupChoice {
    A,
    B,
    #[serde(rename = "custom")]
    Custom,
}

impl FromStr for GroupChoice {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "A" | "a" => Ok(Self::A),
            "B" | "b" => Ok(Self::B),
            "custom" => Ok(Self::Custom),
            _ => Err(CliError::Validation(format!("unknown group {s:?} (expected A, B or custom)"))),
        }
    }
}

/// Bloch-sphere angles of a single-qubit state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bloch {
    pub theta: f64,
    #[serde(default)]
    pub phi: f64,
}

/// The register whose polar angle follows the sweep grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepTarget {
    Phi1,
    Phi2,
    Chi,
    Nu,
}

/// A user-defined sweep: fixed Bloch angles for the four states, with the
/// polar angle of `sweep` replaced by each grid value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomTask {
    pub phi1: Bloch,
    pub phi2: Bloch,
    pub chi: Bloch,
    pub nu: Bloch,
    pub sweep: SweepTarget,
}

/// Target unitary of the `grape` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GrapeTarget {
    Cswap,
    Identity,
    Rotation { qubit: usize, axis: Axis, angle: f64 },
    /// JSON file holding the rows of a `2^n × 2^n` matrix as `[re, im]` pairs.
    Matrix { path: PathBuf },
}

impl FromStr for GrapeTarget {
    type Err = CliError;

    /// `cswap`, `identity`, `rotation:<qubit>:<x|y|z>:<angle>` or `matrix:<path>`.
    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Validation(format!("bad target {s:?}"));
        let parts: Vec<&str> = s.splitn(4, ':').collect();
        match parts.as_slice() {
            ["cswap"] => Ok(Self::Cswap),
            ["identity"] => Ok(Self::Identity),
            ["rotation", q, axis, angle] => Ok(Self::Rotation {
                qubit: q.parse().map_err(|_| bad())?,
                axis: match *axis {
                    "x" => Axis::X,
                    "y" => Axis::Y,
                    "z" => Axis::Z,
                    _ => return Err(bad()),
                },
                angle: angle.parse().map_err(|_| bad())?,
            }),
            _ => match s.strip_prefix("matrix:") {
                Some(path) => Ok(Self::Matrix { path: path.into() }),
                None => Err(bad()),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrapeSettings {
    pub target: GrapeTarget,
    pub duration_s: f64,
    /// Defaults to 40 µs segments.
    pub segments: Option<usize>,
    pub goal: f64,
    pub max_iterations: usize,
}

impl Default for GrapeSettings {
    fn default() -> Self {
        Self {
            target: GrapeTarget::Cswap,
            duration_s: 28e-3,
            segments: None,
            goal: 0.999,
            max_iterations: 1500,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Molecule JSON; the built-in trichloroethylene model when absent.
    pub molecule: Option<PathBuf>,
    pub group: GroupChoice,
    pub custom: Option<CustomTask>,
    pub theta_grid: Vec<f64>,
    pub noise: NoiseModel,
    pub n_trials: usize,
    pub mode: Mode,
    /// Relative to the config file when loaded from one.
    pub out: PathBuf,
    /// Overrides `noise.seed` (and the GRAPE seed).
    pub seed: Option<u64>,
    pub overlap1_grid: Vec<f64>,
    pub overlap2_grid: Vec<f64>,
    pub grape: GrapeSettings,
    /// Also write SVG plots next to the CSV files.
    pub plots: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let overlaps = vec![0.2, 0.4, 0.6, 0.8, 1.0];
        Self {
            molecule: None,
            group: GroupChoice::A,
            custom: None,
            theta_grid: theta_grid(),
            noise: NoiseModel::default(),
            n_trials: 200,
            mode: Mode::WithEcho,
            out: PathBuf::from("out"),
            seed: None,
            overlap1_grid: overlaps.clone(),
            overlap2_grid: overlaps,
            grape: GrapeSettings::default(),
            plots: false,
        }
    }
}

impl ExperimentConfig {
    /// Parses a config file; syntax and schema errors carry `path:line:column`.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| json_error(path, &e))?;
        // Relative paths inside the config are relative to the config file.
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(m) = &cfg.molecule {
            cfg.molecule = Some(base.join(m));
        }
        cfg.out = base.join(&cfg.out);
        if let GrapeTarget::Matrix { path } = &cfg.grape.target {
            cfg.grape.target = GrapeTarget::Matrix { path: base.join(path) };
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        if self.theta_grid.is_empty() {
            return bad("theta_grid is empty".into());
        }
        if let Some(t) = self.theta_grid.iter().find(|t| !(0.0..=PI).contains(*t)) {
            return bad(format!("theta {t} outside [0, π]"));
        }
        if self.n_trials == 0 {
            return bad("n_trials must be at least 1".into());
        }
        for grid in [&self.overlap1_grid, &self.overlap2_grid] {
            if grid.is_empty() {
                return bad("overlap grid is empty".into());
            }
            if let Some(o) = grid.iter().find(|o| !(**o > 0.0 && **o <= 1.0)) {
                return bad(format!("overlap {o} outside (0, 1]"));
            }
        }
        if self.group == GroupChoice::Custom && self.custom.is_none() {
            return bad("group \"custom\" needs a \"custom\" section".into());
        }
        self.noise.validate()?;
        Ok(())
    }

    /// The noise model with the seed override applied.
    pub fn effective_noise(&self) -> NoiseModel {
        let mut noise = self.noise.clone();
        if let Some(seed) = self.seed {
            noise.seed = seed;
        }
        noise
    }

    pub fn load_molecule(&self) -> Result<Molecule, CliError> {
        match &self.molecule {
            None => Ok(Molecule::tce()),
            Some(path) => load_molecule(path),
        }
    }
}

pub fn load_molecule(path: &Path) -> Result<Molecule, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mol: Molecule = serde_json::from_str(&text).map_err(|e| json_error(path, &e))?;
    mol.validate()
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok(mol)
}

fn json_error(path: &Path, e: &serde_json::Error) -> CliError {
    CliError::Validation(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
}
