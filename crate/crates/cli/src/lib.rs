//! Command-line experiment runner for the superposition lab.
//!
//! Exit codes: 0 success, 1 validation error, 2 goal or threshold not met,
//! 3 internal error.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use superpose::noise::Mode;

use crate::config::{load_molecule, ExperimentConfig, GrapeTarget, GroupChoice};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Threshold(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Threshold(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<superpose::Error> for CliError {
    fn from(e: superpose::Error) -> Self {
        use superpose::Error as E;
        match e {
            E::PpsFidelity { .. } => CliError::Threshold(e.to_string()),
            E::Parse(_)
            | E::InvalidMolecule(_)
            | E::InvalidProgram(_)
            | E::InvalidPulse(_)
            | E::InvalidNoise(_)
            | E::InvalidArgument(_)
            | E::RelaxationOrder { .. }
            | E::InvalidQubit { .. }
            | E::DuplicateQubit(_)
            | E::NotUnitary(_)
            | E::NotNormalized(_)
            | E::UnnormalizedWeights(_)
            | E::ZeroOverlap
            | E::ReferenceOrthogonalToBoth
            | E::Dimension { .. } => CliError::Validation(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "superpose", version, about = "Simulated NMR superposition experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON experiment configuration (defaults apply when omitted).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte-Carlo trials per point.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// ideal, with_echo or no_echo.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Write SVG plots next to the CSV files.
    #[arg(long, global = true)]
    pub plots: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep an experiment group over the θ grid.
    RunGroup {
        /// A, B or custom.
        #[arg(long)]
        group: Option<String>,
    },
    /// Fidelity spread over a grid of input overlaps.
    UncertaintyMap,
    /// Optimize a shaped pulse.
    Grape {
        /// cswap, identity, rotation:<qubit>:<x|y|z>:<angle> or matrix:<path>.
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        segments: Option<usize>,
        #[arg(long)]
        goal: Option<f64>,
        #[arg(long)]
        max_iterations: Option<usize>,
    },
    /// Calibrate and verify the pseudo-pure preparation sequence.
    PpsCheck {
        /// Molecule JSON (overrides the config's molecule).
        #[arg(long)]
        molecule: Option<PathBuf>,
    },
}

/// The configuration after applying command-line overrides.
pub fn resolve(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let c = &cli.common;
    if let Some(out) = &c.out {
        cfg.out = out.clone();
    }
    if c.seed.is_some() {
        cfg.seed = c.seed;
    }
    if let Some(n) = c.trials {
        cfg.n_trials = n;
    }
    if let Some(m) = &c.mode {
        cfg.mode = m.parse::<Mode>()?;
    }
    cfg.plots |= c.plots;
    match &cli.command {
        Command::RunGroup { group: Some(g) } => cfg.group = g.parse::<GroupChoice>()?,
        Command::Grape {
            target,
            duration,
            segments,
            goal,
            max_iterations,
        } => {
            if let Some(t) = target {
                cfg.grape.target = t.parse::<GrapeTarget>()?;
            }
            if let Some(d) = duration {
                cfg.grape.duration_s = *d;
            }
            if segments.is_some() {
                cfg.grape.segments = *segments;
            }
            if let Some(g) = goal {
                cfg.grape.goal = *g;
            }
            if let Some(n) = max_iterations {
                cfg.grape.max_iterations = *n;
            }
        }
        Command::PpsCheck { molecule: Some(m) } => cfg.molecule = Some(m.clone()),
        _ => {}
    }
    Ok(cfg)
}

/// Executes a parsed command, returning the lines to print.
pub fn execute(cli: &Cli) -> Result<Vec<String>, CliError> {
    let cfg = resolve(cli)?;
    match &cli.command {
        Command::RunGroup { .. } => {
            let path = commands::cmd_run_group(&cfg)?;
            Ok(vec![format!("wrote {}", path.display())])
        }
        Command::UncertaintyMap => {
            let path = commands::cmd_uncertainty_map(&cfg)?;
            Ok(vec![format!("wrote {}", path.display())])
        }
        Command::Grape { .. } => {
            let r = commands::cmd_grape(&cfg)?;
            Ok(vec![
                format!("fidelity {:.6} after {} iterations", r.fidelity, r.log.len().saturating_sub(1)),
                format!("wrote {}", cfg.out.join("pulse.json").display()),
            ])
        }
        Command::PpsCheck { .. } => {
            let mol = match &cfg.molecule {
                Some(p) => load_molecule(p)?,
                None => cfg.load_molecule()?,
            };
            let report = commands::cmd_pps_check(&mol, Some(&cfg.out))?;
            Ok(vec![
                format!("fidelity {:.10}", report.fidelity),
                format!("duration_s {:.6e}", report.duration_s),
            ])
        }
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
