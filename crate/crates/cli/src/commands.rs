//! The four experiment commands.

use std::path::{Path, PathBuf};

use superpose::grape::{optimize, ControlPulse, OptimizationResult, OptimizerConfig};
use superpose::linalg::Matrix;
use superpose::nmr::{canned_pps_program, pps_prepare, Molecule, PpsReport};
use superpose::noise::{uncertainty_task, Lab, Mode, NoiseModel, TrialStatistics};
use superpose::protocol::{analytic_superposition, controlled_swap, group_task, run_ideal, theory_overlap, Group};
use superpose::qcore::{bloch_ket, fidelity, Density, Operator};
use superpose::{Error, SuperpositionTask, C64};

use crate::config::{Bloch, CustomTask, ExperimentConfig, GrapeTarget, GroupChoice, SweepTarget};
use crate::output::{ensure_dir, heatmap, num, overlap_plot, write_csv, write_text};
use crate::CliError;

pub const GROUP_COLUMNS: [&str; 8] = [
    "theta_rad",
    "overlap_theory",
    "overlap_sim_mean",
    "overlap_sim_std",
    "fidelity_mean",
    "fidelity_std",
    "success_prob_mean",
    "failed_trials",
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroupRow {
    pub theta: f64,
    pub overlap_theory: f64,
    pub stats: TrialStatistics,
}

/// Task of one sweep point.
pub fn sweep_task(group: GroupChoice, custom: Option<&CustomTask>, theta: f64) -> Result<SuperpositionTask, CliError> {
    match group {
        GroupChoice::A => Ok(group_task(Group::A, theta)),
        GroupChoice::B => Ok(group_task(Group::B, theta)),
        GroupChoice::Custom => {
            let c = custom.ok_or_else(|| CliError::Validation("missing custom task".into()))?;
            let at = |b: Bloch, which: SweepTarget| {
                let t = if c.sweep == which { theta } else { b.theta };
                bloch_ket(t, b.phi)
            };
            let nu = at(c.nu, SweepTarget::Nu);
            Ok(SuperpositionTask::new(
                at(c.phi1, SweepTarget::Phi1),
                at(c.phi2, SweepTarget::Phi2),
                at(c.chi, SweepTarget::Chi),
                nu.amplitude(0),
                nu.amplitude(1),
            )?)
        }
    }
}

/// `|⟨ψ|φ1⟩|²` of the closed-form superposition.
pub fn predicted_overlap(group: GroupChoice, task: &SuperpositionTask, theta: f64) -> Result<f64, CliError> {
    Ok(match group {
        GroupChoice::A => theory_overlap(Group::A, theta),
        GroupChoice::B => theory_overlap(Group::B, theta),
        GroupChoice::Custom => analytic_superposition(task)?.inner(task.phi1()).norm_sqr(),
    })
}

/// The gate-level circuit has no randomness: every trial is identical.
pub fn ideal_statistics(task: &SuperpositionTask, n_trials: usize) -> Result<TrialStatistics, CliError> {
    let out = run_ideal(task)?;
    let rho = Density::pure(&out.output);
    let target = Density::pure(&analytic_superposition(task)?);
    Ok(TrialStatistics {
        mean_fidelity: fidelity(&target, &rho)?,
        std_fidelity: 0.0,
        mean_overlap: out.output.inner(task.phi1()).norm_sqr(),
        std_overlap: 0.0,
        mean_success_probability: out.success_probability,
        n_trials,
        failed_trials: 0,
    })
}

fn failed_statistics(n_trials: usize) -> TrialStatistics {
    TrialStatistics {
        mean_fidelity: f64::NAN,
        std_fidelity: f64::NAN,
        mean_overlap: f64::NAN,
        std_overlap: f64::NAN,
        mean_success_probability: f64::NAN,
        n_trials: 0,
        failed_trials: n_trials,
    }
}

fn statistics(lab: Option<&Lab>, task: &SuperpositionTask, n: usize, mode: Mode) -> Result<TrialStatistics, CliError> {
    let r = match lab {
        None => return ideal_statistics(task, n),
        Some(lab) => lab.monte_carlo(task, n, mode),
    };
    match r {
        Err(Error::AllTrialsFailed(_)) => Ok(failed_statistics(n)),
        other => Ok(other?),
    }
}

/// The calibrated lab for noisy modes; `None` for the gate-level mode.
fn build_lab(mol: &Molecule, noise: &NoiseModel, mode: Mode) -> Result<Option<Lab>, CliError> {
    if mode == Mode::Ideal {
        return Ok(None);
    }
    Ok(Some(Lab::new(mol, noise)?))
}

pub fn run_group(cfg: &ExperimentConfig) -> Result<Vec<GroupRow>, CliError> {
    cfg.validate()?;
    let mol = cfg.load_molecule()?;
    let lab = build_lab(&mol, &cfg.effective_noise(), cfg.mode)?;
    cfg.theta_grid
        .iter()
        .map(|&theta| {
            let task = sweep_task(cfg.group, cfg.custom.as_ref(), theta)?;
            Ok(GroupRow {
                theta,
                overlap_theory: predicted_overlap(cfg.group, &task, theta)?,
                stats: statistics(lab.as_ref(), &task, cfg.n_trials, cfg.mode)?,
            })
        })
        .collect()
}

pub fn group_csv_name(cfg: &ExperimentConfig) -> String {
    let g = match cfg.group {
        GroupChoice::A => "a",
        GroupChoice::B => "b",
        GroupChoice::Custom => "custom",
    };
    format!("group_{g}_{}.csv", cfg.mode)
}

/// Runs the sweep and writes its CSV (and SVG); returns the CSV path.
pub fn cmd_run_group(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let rows = run_group(cfg)?;
    ensure_dir(&cfg.out)?;
    let path = cfg.out.join(group_csv_name(cfg));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                num(r.theta),
                num(r.overlap_theory),
                num(r.stats.mean_overlap),
                num(r.stats.std_overlap),
                num(r.stats.mean_fidelity),
                num(r.stats.std_fidelity),
                num(r.stats.mean_success_probability),
                r.stats.failed_trials.to_string(),
            ]
        })
        .collect();
    write_csv(&path, &header(&GROUP_COLUMNS), &body)?;
    if cfg.plots {
        let points: Vec<(f64, f64, f64)> = rows.iter().map(|r| (r.theta, r.stats.mean_overlap, r.stats.std_overlap)).collect();
        let group = cfg.group;
        let custom = cfg.custom.clone();
        let theory = move |t: f64| {
            sweep_task(group, custom.as_ref(), t)
                .and_then(|task| predicted_overlap(group, &task, t))
                .unwrap_or(f64::NAN)
        };
        let title = format!("group {:?}, {} mode, {} trials", cfg.group, cfg.mode, cfg.n_trials);
        write_text(&path.with_extension("svg"), &overlap_plot(&theory, &points, &title))?;
    }
    Ok(path)
}

/// `out[i][j]` for `(overlap1_grid[i], overlap2_grid[j])`.
pub fn uncertainty(cfg: &ExperimentConfig) -> Result<Vec<Vec<TrialStatistics>>, CliError> {
    cfg.validate()?;
    let mol = cfg.load_molecule()?;
    let lab = build_lab(&mol, &cfg.effective_noise(), cfg.mode)?;
    cfg.overlap1_grid
        .iter()
        .map(|&o1| {
            cfg.overlap2_grid
                .iter()
                .map(|&o2| statistics(lab.as_ref(), &uncertainty_task(o1, o2)?, cfg.n_trials, cfg.mode))
                .collect()
        })
        .collect()
}

/// Writes the fidelity-std matrix (and the mean matrix); returns the std
/// CSV path.
pub fn cmd_uncertainty_map(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let map = uncertainty(cfg)?;
    ensure_dir(&cfg.out)?;
    let path = cfg.out.join(format!("uncertainty_map_{}.csv", cfg.mode));
    let mut head = vec!["overlap1\\overlap2".to_string()];
    head.extend(cfg.overlap2_grid.iter().map(|&o| num(o)));
    let table = |f: &dyn Fn(&TrialStatistics) -> f64| -> Vec<Vec<String>> {
        map.iter()
            .zip(&cfg.overlap1_grid)
            .map(|(row, &o1)| std::iter::once(num(o1)).chain(row.iter().map(|s| num(f(s)))).collect())
            .collect()
    };
    write_csv(&path, &head, &table(&|s| s.std_fidelity))?;
    write_csv(&cfg.out.join(format!("uncertainty_map_{}_mean.csv", cfg.mode)), &head, &table(&|s| s.mean_fidelity))?;
    if cfg.plots {
        let stds: Vec<Vec<f64>> = map.iter().map(|r| r.iter().map(|s| s.std_fidelity).collect()).collect();
        let title = format!("fidelity std, {} mode, {} trials", cfg.mode, cfg.n_trials);
        write_text(&path.with_extension("svg"), &heatmap(&stds, &cfg.overlap1_grid, &cfg.overlap2_grid, &title))?;
    }
    Ok(path)
}

pub fn grape_target(target: &GrapeTarget, n_qubits: usize) -> Result<Operator<f64>, CliError> {
    match target {
        GrapeTarget::Cswap => {
            if n_qubits != 3 {
                return Err(CliError::Validation("the controlled-SWAP needs three spins".into()));
            }
            Ok(controlled_swap())
        }
        GrapeTarget::Identity => Ok(Operator::identity(n_qubits)),
        GrapeTarget::Rotation { qubit, axis, angle } => {
            Ok(Operator::embed(&Operator::rotation(*axis, *angle), *qubit, n_qubits)?)
        }
        GrapeTarget::Matrix { path } => read_matrix(path, n_qubits),
    }
}

fn read_matrix(path: &Path, n_qubits: usize) -> Result<Operator<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))?;
    let d = 1usize << n_qubits;
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(CliError::Validation(format!("{}: expected a {d}×{d} matrix", path.display())));
    }
    let data = rows.into_iter().flatten().map(|[re, im]| C64::new(re, im)).collect();
    Ok(Operator::unitary(Matrix::from_row_major(d, data))?)
}

pub fn grape(cfg: &ExperimentConfig) -> Result<OptimizationResult, CliError> {
    cfg.validate()?;
    let mol = cfg.load_molecule()?;
    let g = &cfg.grape;
    if !(g.duration_s >= 0.0 && g.duration_s.is_finite()) {
        return Err(CliError::Validation(format!("duration {} s", g.duration_s)));
    }
    let mut config = OptimizerConfig::new(grape_target(&g.target, mol.n_spins())?, g.duration_s);
    if let Some(n) = g.segments {
        config.segment_count = n;
        config.dt_s = if n == 0 { 0.0 } else { g.duration_s / n as f64 };
    }
    if config.segment_count == 0 && g.duration_s > 0.0 {
        return Err(CliError::Validation("a nonzero duration needs at least one segment".into()));
    }
    config.fidelity_goal = g.goal;
    config.max_iterations = g.max_iterations;
    config.seed = cfg.effective_noise().seed;
    Ok(optimize(&config, &mol, None)?)
}

/// Writes `pulse.json` and `grape_iterations.csv`; fails with a threshold
/// error when the goal is missed (after writing both files).
pub fn cmd_grape(cfg: &ExperimentConfig) -> Result<OptimizationResult, CliError> {
    let r = grape(cfg)?;
    ensure_dir(&cfg.out)?;
    write_text(&cfg.out.join("pulse.json"), &(r.pulse.to_json() + "\n"))?;
    let rows: Vec<Vec<String>> = r
        .log
        .iter()
        .map(|it| vec![it.iteration.to_string(), num(it.fidelity), num(it.gradient_norm)])
        .collect();
    write_csv(&cfg.out.join("grape_iterations.csv"), &header(&["iteration", "fidelity", "gradient_norm"]), &rows)?;
    if !r.goal_met {
        return Err(CliError::Threshold(format!(
            "fidelity {:.6} below goal {} after {} iterations",
            r.fidelity,
            cfg.grape.goal,
            r.log.len().saturating_sub(1)
        )));
    }
    Ok(r)
}

/// Calibrates and runs the canned preparation sequence.
pub fn cmd_pps_check(mol: &Molecule, out: Option<&Path>) -> Result<PpsReport, CliError> {
    let program = canned_pps_program(mol)?;
    let report = pps_prepare(mol, &program)?;
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_text(&dir.join("pps_program.json"), &(program.to_json() + "\n"))?;
        write_csv(
            &dir.join("pps_check.csv"),
            &header(&["fidelity", "duration_s", "crushers"]),
            &[vec![num(report.fidelity), num(report.duration_s), program.crusher_count().to_string()]],
        )?;
    }
    Ok(report)
}

/// A pulse read back from `pulse.json`.
pub fn load_pulse(path: &Path) -> Result<ControlPulse, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    Ok(ControlPulse::from_json(&text)?)
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}
