use superpose::nmr::Molecule;
use superpose::noise::{uncertainty_map, Lab, Mode, NoiseModel};
use superpose::protocol::{group_task, run_ideal, theta_grid, Group};
use superpose::qcore::{fidelity, Density};

#[test]
fn noiseless_physical_chain_reproduces_ideal_output() {
    let lab = Lab::new(&Molecule::tce(), &NoiseModel::noiseless()).unwrap();
    assert!(lab.pps_fidelity() >= 0.998);
    let mut worst = 0.0f64;
    for group in [Group::A, Group::B] {
        for theta in theta_grid::<f64>() {
            let task = group_task(group, theta);
            for mode in [Mode::WithEcho, Mode::NoEcho] {
                let stats = lab.monte_carlo(&task, 1, mode).unwrap();
                worst = worst.max(1.0 - stats.mean_fidelity);
                assert_eq!(stats.failed_trials, 0);
            }
        }
    }
    assert!(worst < 1e-8, "fidelity deficit {worst}");
}

#[test]
fn statistics_are_bit_reproducible() {
    let noise = NoiseModel {
        coherent_error: superpose::noise::CoherentError::Perturbation { strength: 0.05 },
        ..NoiseModel::default()
    };
    let lab = Lab::new(&Molecule::tce(), &noise).unwrap();
    let grid = [0.4, 1.0];
    let a = uncertainty_map(&lab, &grid, &grid, 25, Mode::NoEcho).unwrap();
    let b = uncertainty_map(&lab, &grid, &grid, 25, Mode::NoEcho).unwrap();
    assert_eq!(a, b);
    let other = Lab::new(&Molecule::tce(), &NoiseModel { seed: 2, ..noise }).unwrap();
    assert_ne!(uncertainty_map(&other, &grid, &grid, 25, Mode::NoEcho).unwrap(), a);
}

#[test]
fn ideal_mode_matches_circuit() {
    let lab = Lab::new(&Molecule::tce(), &NoiseModel::noiseless()).unwrap();
    for theta in theta_grid::<f64>() {
        let task = group_task(Group::B, theta);
        let s = lab.monte_carlo(&task, 3, Mode::Ideal).unwrap();
        let out = run_ideal(&task).unwrap();
        assert!((s.mean_fidelity - 1.0).abs() < 1e-12);
        assert!((s.mean_success_probability - out.success_probability).abs() < 1e-12);
        assert_eq!(s.std_fidelity, 0.0);
        let rho = Density::pure(&out.output);
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn post_selection_rarely_fails_at_moderate_overlaps() {
    let lab = Lab::new(&Molecule::tce(), &NoiseModel::default()).unwrap();
    let grid = [0.5, 0.75, 1.0];
    for mode in [Mode::WithEcho, Mode::NoEcho] {
        let map = uncertainty_map(&lab, &grid, &grid, 200, mode).unwrap();
        for s in map.iter().flatten() {
            let total = s.n_trials + s.failed_trials;
            assert!((s.failed_trials as f64) < 0.01 * total as f64, "{} of {total} failed", s.failed_trials);
        }
    }
}
