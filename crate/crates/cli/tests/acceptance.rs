//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use superpose::grape::{gate_fidelity, grape_gradient, optimize, propagate, ControlPulse, OptimizerConfig};
use superpose::linalg::Matrix;
use superpose::nmr::{canned_pps_program, pps_prepare, Molecule};
use superpose::noise::{echo_comparison, relaxation_kraus, relaxation_step, uncertainty_map, Lab, Mode, NoiseModel};
use superpose::protocol::{analytic_superposition, controlled_swap, group_task, run_ideal, theta_grid, Group};
use superpose::qcore::{bloch_ket, fidelity, pauli_string, Axis, Density, DensityKind, Ket, Operator};
use superpose::{SuperpositionTask, C64};
use superpose_cli::{execute, Cli};
use tempfile::TempDir;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit: Duration, elapsed: Duration, detail: String) -> Outcome {
    if elapsed > limit {
        Err(format!("{detail}; runtime {elapsed:.2?} exceeds {limit:?}"))
    } else {
        Ok(detail)
    }
}

fn random_task(rng: &mut ChaCha8Rng) -> SuperpositionTask {
    let ket = |rng: &mut ChaCha8Rng| bloch_ket(rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI));
    loop {
        let (p1, p2, chi, nu) = (ket(rng), ket(rng), ket(rng), ket(rng));
        let task = SuperpositionTask::new(p1, p2, chi, nu.amplitude(0), nu.amplitude(1)).unwrap();
        if task.overlap1().norm() >= 0.05 && task.overlap2().norm() >= 0.05 {
            return task;
        }
    }
}

fn oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let task = random_task(&mut rng);
        let out = run_ideal(&task).map_err(|e| e.to_string())?;
        let expect = analytic_superposition(&task).map_err(|e| e.to_string())?;
        worst = worst.max(out.output.distance_up_to_phase(&expect));
    }
    let detail = format!("max phase-insensitive distance {worst:.1e} over 1000 tasks");
    check(worst < 1e-10, detail).and_then(|d| within(Duration::from_secs(10), t.elapsed(), d))
}

fn group_a_curve() -> Outcome {
    let t = Instant::now();
    let (mut dov, mut dp) = (0.0f64, 0.0f64);
    for theta in theta_grid::<f64>() {
        let task = group_task(Group::A, theta);
        let out = run_ideal(&task).map_err(|e| e.to_string())?;
        let overlap = out.output.inner(task.phi1()).norm_sqr();
        dov = dov.max((overlap - (theta / 2.0).cos().powi(2)).abs());
        dp = dp.max((out.success_probability - 0.25).abs());
    }
    let detail = format!("overlap error {dov:.1e}, probability error {dp:.1e}");
    check(dov < 1e-10 && dp < 1e-10, detail).and_then(|d| within(Duration::from_secs(1), t.elapsed(), d))
}

fn group_b_curve() -> Outcome {
    let t = Instant::now();
    let (mut dstate, mut dov) = (0.0f64, 0.0f64);
    for theta in theta_grid::<f64>() {
        let task = group_task(Group::B, theta);
        let out = run_ideal(&task).map_err(|e| e.to_string())?;
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let norm = (2.0 + 2.0 * c).sqrt();
        let expect = Ket::new(vec![C64::new((1.0 + c) / norm, 0.0), C64::new(0.0, s / norm)]).unwrap();
        dstate = dstate.max(out.output.distance_up_to_phase(&expect));
        let overlap = out.output.amplitude(0).norm_sqr();
        dov = dov.max((overlap - (1.0 + 2.0 * c + c * c) / (2.0 + 2.0 * c)).abs());
    }
    let detail = format!("state error {dstate:.1e}, overlap error {dov:.1e}");
    check(dstate < 1e-10 && dov < 1e-10, detail).and_then(|d| within(Duration::from_secs(1), t.elapsed(), d))
}

fn pipeline_consistency() -> Outcome {
    let lab = Lab::new(&Molecule::tce(), &NoiseModel::noiseless()).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for group in [Group::A, Group::B] {
        for theta in theta_grid::<f64>() {
            let task = group_task(group, theta);
            let ideal = Density::pure(&run_ideal(&task).map_err(|e| e.to_string())?.output);
            for mode in [Mode::WithEcho, Mode::NoEcho] {
                let out = lab.run_trial(&task, mode, &mut rng).map_err(|e| e.to_string())?;
                worst = worst.max(1.0 - fidelity(&ideal, &out.output).map_err(|e| e.to_string())?);
            }
        }
    }
    check(worst < 1e-6, format!("max fidelity deficit {worst:.1e} (24 points × 2 modes)"))
}

fn pps_preparation() -> Outcome {
    let t = Instant::now();
    let mol = Molecule::tce();
    let program = canned_pps_program(&mol).map_err(|e| e.to_string())?;
    let report = pps_prepare(&mol, &program).map_err(|e| e.to_string())?;
    let detail = format!("fidelity {:.10}, sequence {:.1} ms", report.fidelity, report.duration_s * 1e3);
    check(report.fidelity >= 0.998, detail).and_then(|d| within(Duration::from_secs(5), t.elapsed(), d))
}

fn grape_criteria() -> Outcome {
    let mol = Molecule::tce();
    // (a) exact gradient against central differences.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for target in [controlled_swap(), Operator::embed(&Operator::rotation(Axis::Y, PI / 2.0), 2, 3).unwrap()] {
        for _ in 0..3 {
            let mut p = ControlPulse::zeros(&mol, 6, 40e-6).unwrap();
            for a in p.amplitudes.iter_mut().flatten() {
                *a = rng.random_range(-2.0 * PI * 3e3..2.0 * PI * 3e3);
            }
            let g = grape_gradient(&p, &target, &mol).map_err(|e| e.to_string())?;
            let scale = g.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            let h = 1e-2;
            for c in 0..p.channels.len() {
                for k in 0..p.segment_count() {
                    let f = |delta: f64| {
                        let mut q = p.clone();
                        q.amplitudes[c][k] += delta;
                        gate_fidelity(&propagate(&q, &mol).unwrap(), &target).unwrap()
                    };
                    let fd = (f(h) - f(-h)) / (2.0 * h);
                    worst = worst.max((g[c][k] - fd).abs() / fd.abs().max(scale));
                }
            }
        }
    }
    if worst > 1e-6 {
        return Err(format!("(a) gradient relative error {worst:.1e} > 1e-6"));
    }
    // (b) controlled-SWAP, 28 ms.
    let t = Instant::now();
    let r = optimize(&OptimizerConfig::new(controlled_swap(), 28e-3), &mol, None).map_err(|e| e.to_string())?;
    let cswap_time = t.elapsed();
    if r.fidelity < 0.99 || cswap_time > Duration::from_secs(600) {
        return Err(format!("(b) controlled-SWAP fidelity {:.5} in {cswap_time:.1?}", r.fidelity));
    }
    // (c) 2 ms π/2 rotations, one per spin.
    let mut rot = Vec::new();
    for q in 0..3 {
        let target = Operator::embed(&Operator::rotation(Axis::X, PI / 2.0), q, 3).unwrap();
        let r = optimize(&OptimizerConfig::new(target, 2e-3), &mol, None).map_err(|e| e.to_string())?;
        if r.fidelity < 0.999 {
            return Err(format!("(c) rotation on spin {q}: fidelity {:.5}", r.fidelity));
        }
        rot.push(format!("{:.5}", r.fidelity));
    }
    Ok(format!(
        "(a) gradient rel. error {worst:.1e}; (b) CSWAP {:.5} in {} iterations, {cswap_time:.1?}; (c) rotations {}",
        r.fidelity,
        r.log.len() - 1,
        rot.join("/")
    ))
}

fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let ranks = |v: &[f64]| -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            for &k in &idx[i..=j] {
                r[k] = (i + j) as f64 / 2.0;
            }
            i = j + 1;
        }
        r
    };
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn noise_trends() -> Outcome {
    let t = Instant::now();
    let lab = Lab::new(&Molecule::tce(), &NoiseModel::default()).map_err(|e| e.to_string())?;
    let grid = theta_grid::<f64>();
    let rows = echo_comparison(&lab, &grid, 200).map_err(|e| e.to_string())?;
    let (first, last) = (&rows[0].with_echo, &rows[11].with_echo);
    let ratio = last.std_fidelity / first.std_fidelity;
    let a = ratio >= 3.0;
    let b = rows[..=6].iter().all(|r| last.mean_fidelity < r.with_echo.mean_fidelity);
    let overlaps = [0.2, 0.4, 0.6, 0.8, 1.0];
    let map = uncertainty_map(&lab, &overlaps, &overlaps, 200, Mode::WithEcho).map_err(|e| e.to_string())?;
    let (mut worst_rho, mut worst_at) = (-1.0f64, String::new());
    for (i, o) in overlaps.iter().enumerate() {
        let row: Vec<f64> = map[i].iter().map(|s| s.std_fidelity).collect();
        let col: Vec<f64> = map.iter().map(|r| r[i].std_fidelity).collect();
        for (rho, at) in [(spearman(&overlaps, &row), "overlap1"), (spearman(&overlaps, &col), "overlap2")] {
            if rho > worst_rho {
                (worst_rho, worst_at) = (rho, format!(" at {at}={o}"));
            }
        }
    }
    let c = worst_rho <= -0.8;
    let echo = rows.iter().map(|r| r.with_echo.mean_fidelity).sum::<f64>() / rows.len() as f64;
    let no_echo = rows.iter().map(|r| r.no_echo.mean_fidelity).sum::<f64>() / rows.len() as f64;
    let d = echo <= no_echo;
    let flag = |ok: bool| if ok { "ok" } else { "FAIL" };
    let detail = format!(
        "(a) std ratio {ratio:.0}× {}; (b) {}; (c) worst rank corr {worst_rho:.2}{worst_at} {}; (d) echo {echo:.5} vs no-echo {no_echo:.5} {}",
        flag(a),
        flag(b),
        flag(c),
        flag(d)
    );
    check(a && b && c && d, detail).and_then(|d| within(Duration::from_secs(900), t.elapsed(), d))
}

fn channel_correctness() -> Outcome {
    let mol = Molecule::tce();
    let times: Vec<(f64, f64)> = mol.spins.iter().map(|s| (s.t1_s, s.t2_s)).collect();
    let dt = 0.37;
    // Choi matrix of the full three-spin channel.
    let mut choi = Matrix::zeros(64);
    for i in 0..8 {
        for j in 0..8 {
            let mut e = Matrix::zeros(8);
            e[(i, j)] = C64::new(1.0, 0.0);
            let img = relaxation_step(&Density::unchecked(e, DensityKind::Physical), dt, &mol).map_err(|e| e.to_string())?;
            for a in 0..8 {
                for b in 0..8 {
                    choi[(8 * i + a, 8 * j + b)] = img.matrix()[(a, b)];
                }
            }
        }
    }
    let min_eig = choi.eigh().0[0];
    // Trace preservation and semigroup on random states.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut dtrace, mut dsemi) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let a = Matrix::from_fn(8, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let m = &a * &a.adjoint();
        let tr = m.trace().re;
        let rho = Density::unchecked(m.scale_real(1.0 / tr), DensityKind::Physical);
        let (s, u) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        let one = relaxation_step(&rho, s + u, &mol).map_err(|e| e.to_string())?;
        let two = relaxation_step(&relaxation_step(&rho, s, &mol).unwrap(), u, &mol).unwrap();
        dtrace = dtrace.max((one.trace() - 1.0).abs());
        dsemi = dsemi.max(one.matrix().max_abs_diff(two.matrix()));
    }
    // Closed-form decays per spin: excited population and ⟨σx⟩ of |+⟩.
    let mut ddecay = 0.0f64;
    for (q, &(t1, t2)) in times.iter().enumerate() {
        let mut excited = vec![Ket::zero(); 3];
        excited[q] = Ket::one();
        let mut plus = vec![Ket::zero(); 3];
        plus[q] = Ket::plus();
        let product = |ks: &[Ket<f64>]| ks[0].tensor(&ks[1]).tensor(&ks[2]);
        let out = relaxation_step(&Density::pure(&product(&excited)), dt, &mol).unwrap();
        let mut z = vec![None; 3];
        z[q] = Some(Axis::Z);
        let pop = (1.0 - out.expectation(&pauli_string(&z)).re) / 2.0;
        ddecay = ddecay.max((pop - (-dt / t1).exp()).abs());
        let out = relaxation_step(&Density::pure(&product(&plus)), dt, &mol).unwrap();
        let mut x = vec![None; 3];
        x[q] = Some(Axis::X);
        ddecay = ddecay.max((out.expectation(&pauli_string(&x)).re - (-dt / t2).exp()).abs());
        // Each single-spin Kraus set is complete.
        let ks = relaxation_kraus(dt, t1, t2).map_err(|e| e.to_string())?;
        let sum = ks.iter().fold(Matrix::zeros(2), |acc, k| &acc + &(&k.adjoint() * k));
        dtrace = dtrace.max(sum.max_abs_diff(&Matrix::identity(2)));
    }
    let detail = format!(
        "trace {dtrace:.1e}, min Choi eigenvalue {min_eig:.1e}, semigroup {dsemi:.1e}, decay {ddecay:.1e}"
    );
    check(dtrace < 1e-10 && min_eig > -1e-10 && dsemi < 1e-10 && ddecay < 1e-10, detail)
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let cli = Cli::try_parse_from(std::iter::once("superpose").chain(args.iter().copied())).map_err(|e| e.to_string())?;
    execute(&cli).map(|_| ()).map_err(|e| e.to_string())
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = TempDir::new().map_err(|e| e.to_string())?;
    let commands: [&[&str]; 5] = [
        &["run-group", "--group", "B", "--trials", "50", "--plots"],
        &["run-group", "--group", "A", "--mode", "no_echo", "--trials", "50"],
        &["uncertainty-map", "--trials", "50", "--plots"],
        &["grape"],
        &["pps-check"],
    ];
    let mut files = 0;
    for (k, cmd) in commands.iter().enumerate() {
        let mut runs = Vec::new();
        for rerun in 0..2 {
            let out = tmp.path().join(format!("{k}_{rerun}"));
            let mut args = cmd.to_vec();
            let out_s = out.to_string_lossy().into_owned();
            args.extend(["--seed", "7", "--out", &out_s]);
            run_cli(&args).map_err(|e| format!("{}: {e}", cmd[0]))?;
            runs.push(snapshot(&out));
        }
        if runs[0] != runs[1] || runs[0].is_empty() {
            return Err(format!("`{}` output differs between reruns", cmd.join(" ")));
        }
        files += runs[0].len();
    }
    Ok(format!("5 invocations of 4 commands, {files} files byte-identical"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("analytic-oracle equivalence", oracle_equivalence),
        ("group A curve", group_a_curve),
        ("group B curve", group_b_curve),
        ("physical-pipeline consistency", pipeline_consistency),
        ("PPS preparation", pps_preparation),
        ("GRAPE", grape_criteria),
        ("noise-trend reproduction", noise_trends),
        ("channel correctness", channel_correctness),
        ("determinism", determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = f();
        let elapsed = t.elapsed();
        match r {
            Ok(d) => println!("PASS {} {name}: {d} [{elapsed:.2?}]", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {} {name}: {d} [{elapsed:.2?}]", i + 1)
            }
        }
    }
    println!("{} of {} criteria passed in {:.1?}", criteria.len() - failed, criteria.len(), start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
