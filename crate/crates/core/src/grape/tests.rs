use std::f64::consts::PI;

use super::*;
use crate::nmr::{internal_hamiltonian, Spin};
use crate::protocol::controlled_swap;
use crate::qcore::{evolve, Axis};

fn random_pulse(mol: &Molecule, segments: usize, dt: f64, seed: u64) -> ControlPulse {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 2.0 * PI * 2e3).unwrap();
    let mut p = ControlPulse::zeros(mol, segments, dt).unwrap();
    for row in p.amplitudes.iter_mut() {
        for a in row.iter_mut() {
            *a = normal.sample(&mut rng);
        }
    }
    p
}

fn proton_only() -> Molecule {
    Molecule::new(
        vec![Spin {
            name: "H".into(),
            shift_hz: 0.0,
            t1_s: 1.0,
            t2_s: 1.0,
            gyro_rel: 1.0,
        }],
        vec![],
    )
    .unwrap()
}

fn local_rotation(qubit: usize, axis: Axis, angle: f64) -> Operator {
    Operator::embed(&Operator::rotation(axis, angle), qubit, 3).unwrap()
}

#[test]
fn zero_pulse_is_drift() {
    let mol = Molecule::tce();
    let p = ControlPulse::zeros(&mol, 10, 40e-6).unwrap();
    let u = propagate(&p, &mol).unwrap();
    let drift = evolve(&internal_hamiltonian(&mol), 400e-6).unwrap();
    assert!(u.matrix().max_abs_diff(drift.matrix()) < 1e-12);
}

#[test]
fn vanishing_segments_give_identity() {
    let mol = Molecule::tce();
    let mut p = random_pulse(&mol, 5, 40e-6, 3);
    p.dt_s = 0.0;
    assert!(propagate(&p, &mol).unwrap().matrix().max_abs_diff(&Matrix::identity(8)) < 1e-13);
}

#[test]
fn segment_refinement_is_exact() {
    let mol = Molecule::tce();
    for seed in 0..3 {
        let p = random_pulse(&mol, 12, 40e-6, seed);
        let u = propagate(&p, &mol).unwrap();
        let v = propagate(&p.refined(2), &mol).unwrap();
        assert!(u.matrix().max_abs_diff(v.matrix()) < 1e-12);
        assert!(u.matrix().unitarity_error() < 1e-10);
    }
}

#[test]
fn gate_fidelity_examples() {
    let u = controlled_swap::<f64>();
    assert!((gate_fidelity(&u, &u).unwrap() - 1.0).abs() < 1e-15);
    let phased = Operator::unitary(u.matrix().scale(Complex64::from_polar(1.0, 0.7))).unwrap();
    assert!((gate_fidelity(&phased, &u).unwrap() - 1.0).abs() < 1e-15);
    let x1 = local_rotation(0, Axis::X, PI);
    assert!(gate_fidelity(&Operator::identity(3), &x1).unwrap() < 1e-15);
    assert!(gate_fidelity(&Operator::identity(2), &x1).is_err());
}

#[test]
fn gradient_matches_finite_differences() {
    let mol = Molecule::tce();
    let targets = [controlled_swap::<f64>(), local_rotation(1, Axis::Y, PI / 2.0)];
    for target in &targets {
        for seed in 0..5 {
            let p = random_pulse(&mol, 8, 40e-6, 10 + seed);
            let g = grape_gradient(&p, target, &mol).unwrap();
            let scale = g.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
            let h = 1e-2;
            for c in 0..p.channels.len() {
                for k in 0..p.segment_count() {
                    let mut plus = p.clone();
                    let mut minus = p.clone();
                    plus.amplitudes[c][k] += h;
                    minus.amplitudes[c][k] -= h;
                    let fp = gate_fidelity(&propagate(&plus, &mol).unwrap(), target).unwrap();
                    let fm = gate_fidelity(&propagate(&minus, &mol).unwrap(), target).unwrap();
                    let fd = (fp - fm) / (2.0 * h);
                    assert!(
                        (g[c][k] - fd).abs() <= 1e-6 * fd.abs().max(scale),
                        "channel {c} segment {k}: {} vs {fd}",
                        g[c][k]
                    );
                }
            }
        }
    }
}

#[test]
fn one_parameter_gradient_closed_form() {
    // |tr(e^{-i u dt σx/2})|/2 = |cos(u dt/2)|.
    let mol = proton_only();
    let dt = 1e-4;
    for u in [1.0e3, 7.5e3, -4.0e3] {
        let p = ControlPulse::new(dt, vec!["H_x".into()], vec![vec![u]]).unwrap();
        let g = grape_gradient(&p, &Operator::identity(1), &mol).unwrap();
        let half = u * dt / 2.0;
        let expect = -(dt / 2.0) * half.sin() * half.cos().signum();
        assert!((g[0][0] - expect).abs() < 1e-15, "{} vs {expect}", g[0][0]);
    }
}

#[test]
fn stationary_at_perfect_fidelity() {
    let mol = Molecule::tce();
    let p = random_pulse(&mol, 10, 40e-6, 99);
    let target = propagate(&p, &mol).unwrap();
    let g = grape_gradient(&p, &target, &mol).unwrap();
    let norm = g.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
    assert!(norm <= 1e-6, "{norm}");
}

#[test]
fn drift_target_converges_immediately() {
    let mol = Molecule::tce();
    let target = evolve(&internal_hamiltonian(&mol), 2e-3).unwrap();
    let config = OptimizerConfig::new(target, 2e-3);
    let zero = ControlPulse::zeros(&mol, config.segment_count, config.dt_s).unwrap();
    let r = optimize(&config, &mol, Some(&zero)).unwrap();
    assert!(r.goal_met);
    assert_eq!(r.log.len(), 1);
    assert_eq!(r.log[0].iteration, 0);
    assert!((r.fidelity - 1.0).abs() < 1e-12);
}

#[test]
fn empty_identity_target_is_trivial() {
    let mol = Molecule::tce();
    let r = optimize(&OptimizerConfig::new(Operator::identity(3), 0.0), &mol, None).unwrap();
    assert!(r.goal_met);
    assert_eq!(r.pulse.segment_count(), 0);
}

#[test]
fn local_rotation_in_two_ms() {
    let mol = Molecule::tce();
    let mut config = OptimizerConfig::new(local_rotation(0, Axis::X, PI / 2.0), 2e-3);
    config.fidelity_goal = 0.9995;
    let r = optimize(&config, &mol, None).unwrap();
    assert!(r.goal_met && r.fidelity >= 0.999, "{}", r.fidelity);
    assert!(r.log.windows(2).all(|w| w[1].fidelity >= w[0].fidelity));
    assert!(r.pulse.max_amplitude() <= DEFAULT_MAX_AMPLITUDE);
    let nominal = gate_fidelity(&propagate(&r.pulse, &mol).unwrap(), &config.target).unwrap();
    assert!((nominal - r.fidelity).abs() < 1e-12);
}

#[test]
fn robustness_scan_examples() {
    let mol = Molecule::tce();
    let target = controlled_swap::<f64>();
    let p = random_pulse(&mol, 6, 40e-6, 5);
    let nominal = gate_fidelity(&propagate(&p, &mol).unwrap(), &target).unwrap();
    let scan = rf_robustness_scan(&p, &target, &mol, &[1.0]).unwrap();
    assert!((scan[0].1 - nominal).abs() < 1e-15);
    let zero = ControlPulse::zeros(&mol, 6, 40e-6).unwrap();
    let scan = rf_robustness_scan(&zero, &target, &mol, &[0.9, 1.0, 1.1]).unwrap();
    assert!(scan.iter().all(|(_, f)| (f - scan[0].1).abs() < 1e-15));
}

#[test]
fn ensemble_pulse_is_flatter_under_rf_scaling() {
    let mol = Molecule::tce();
    let target = local_rotation(0, Axis::X, PI / 2.0);
    let scales = [0.95, 1.0, 1.05];
    let spread = |p: &ControlPulse| {
        let f: Vec<f64> = rf_robustness_scan(p, &target, &mol, &scales).unwrap().iter().map(|x| x.1).collect();
        f.iter().cloned().fold(f64::MIN, f64::max) - f.iter().cloned().fold(f64::MAX, f64::min)
    };
    let mut plain = OptimizerConfig::new(target.clone(), 2e-3);
    plain.fidelity_goal = 0.9999;
    let plain = optimize(&plain, &mol, None).unwrap();
    let mut robust = OptimizerConfig::new(target.clone(), 2e-3);
    robust.fidelity_goal = 0.9999;
    robust.rf_ensemble = scales.iter().map(|&value| EnsembleMember { value, weight: 1.0 / 3.0 }).collect();
    let robust = optimize(&robust, &mol, None).unwrap();
    let nominal = gate_fidelity(&propagate(&robust.pulse, &mol).unwrap(), &target).unwrap();
    assert!(nominal >= 0.999 && plain.fidelity >= 0.999);
    assert!(spread(&robust.pulse) < spread(&plain.pulse), "{} vs {}", spread(&robust.pulse), spread(&plain.pulse));
}

#[test]
fn config_validation() {
    let mut c = OptimizerConfig::new(Operator::identity(3), 1e-3);
    c.fidelity_goal = 1.5;
    assert!(c.validate().is_err());
    let mut c = OptimizerConfig::new(Operator::identity(3), 1e-3);
    c.rf_ensemble = vec![EnsembleMember { value: 1.0, weight: 0.5 }];
    assert!(c.validate().is_err());
    let c = OptimizerConfig::new(Operator::identity(3), 1e-3);
    let too_loud = ControlPulse::zeros(&Molecule::tce(), c.segment_count, c.dt_s).unwrap().scaled(0.0);
    let mut loud = too_loud.clone();
    loud.amplitudes[0][0] = 2.0 * DEFAULT_MAX_AMPLITUDE;
    assert!(optimize(&c, &Molecule::tce(), Some(&loud)).is_err());
}
