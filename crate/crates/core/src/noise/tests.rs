use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::qcore::Ket;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn single_spin_mol(t1: f64, t2: f64) -> Molecule {
    Molecule::new(
        vec![crate::nmr::Spin {
            name: "C".into(),
            shift_hz: 0.0,
            t1_s: t1,
            t2_s: t2,
            gyro_rel: 1.0,
        }],
        vec![],
    )
    .unwrap()
}

fn arb_density(n: usize) -> impl Strategy<Value = Density<f64>> {
    let d = 1usize << n;
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 0.1))
        .prop_map(move |v| {
            let a = Matrix::from_row_major(d, v.into_iter().map(|(x, y)| c(x, y)).collect());
            let m = &a * &a.adjoint();
            let tr = m.trace().re;
            Density::unchecked(m.scale_real(1.0 / tr), DensityKind::Physical)
        })
}

#[test]
fn disabled_relaxation_is_identity() {
    let mol = single_spin_mol(f64::INFINITY, f64::INFINITY);
    let rho = Density::pure(&Ket::plus());
    let out = relaxation_step(&rho, 0.3, &mol).unwrap();
    assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
}

#[test]
fn closed_form_decays() {
    let (t1, t2, dt) = (2.0, 0.5, 0.37);
    let mol = single_spin_mol(t1, t2);
    let excited = Density::pure(&Ket::one());
    let out = relaxation_step(&excited, dt, &mol).unwrap();
    assert!((out.matrix()[(1, 1)].re - (-dt / t1).exp()).abs() < 1e-12);
    // Coherence of |+⟩⟨+| is 1/2 (σx expectation 1).
    let plus = Density::pure(&Ket::plus());
    let out = relaxation_step(&plus, dt, &mol).unwrap();
    let sx = crate::qcore::pauli_string::<f64>(&[Some(Axis::X)]);
    assert!((out.expectation(&sx).re - (-dt / t2).exp()).abs() < 1e-12);
}

#[test]
fn kraus_set_is_trace_preserving_and_cp() {
    for &(dt, t1, t2) in &[(1e-3, 5.0, 1.5), (0.5, 1.0, 1.0), (2.0, 3.0, 0.1), (0.0, 1.0, 0.5)] {
        let ks = relaxation_kraus(dt, t1, t2).unwrap();
        let sum = ks.iter().fold(Matrix::zeros(2), |acc, k| &acc + &(&k.adjoint() * k));
        assert!(sum.max_abs_diff(&Matrix::identity(2)) < 1e-12);
        // Choi matrix Σ_ij |i⟩⟨j| ⊗ Λ(|i⟩⟨j|) must be positive semidefinite.
        let mut choi = Matrix::zeros(4);
        for i in 0..2 {
            for j in 0..2 {
                let mut e = Matrix::zeros(2);
                e[(i, j)] = c(1.0, 0.0);
                let rho = Density::unchecked(e, DensityKind::Physical);
                let img = rho.apply_local_channel(0, &ks).unwrap();
                for a in 0..2 {
                    for b in 0..2 {
                        choi[(2 * i + a, 2 * j + b)] = img.matrix()[(a, b)];
                    }
                }
            }
        }
        let (vals, _) = choi.eigh();
        assert!(vals[0] > -1e-12, "{vals:?}");
    }
}

#[test]
fn relaxation_rejects_bad_times() {
    assert!(matches!(relaxation_kraus(1e-3, 1.0, 2.0), Err(Error::RelaxationOrder { .. })));
    assert!(relaxation_kraus(-1.0, 2.0, 1.0).is_err());
}

#[test]
fn exact_tomography_without_noise() {
    let psi = Ket::new(vec![c(0.6, 0.0), c(0.0, 0.8)])
        .unwrap()
        .tensor(&Ket::plus())
        .tensor(&Ket::zero());
    let rho = Density::pure(&psi);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let est = noisy_tomography(&rho, 0.0, &mut rng).unwrap();
    assert!(est.matrix().max_abs_diff(rho.matrix()) < 1e-12);
}

#[test]
fn tomography_is_unbiased() {
    let rho = Density::pure(&Ket::zero());
    let basis = pauli_basis(1);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 10_000;
    let mut acc = Matrix::zeros(2);
    for _ in 0..n {
        let est = noisy_tomography_with(&rho, 0.05, &mut rng, &basis).unwrap();
        assert!((est.trace() - 1.0).abs() < 1e-12);
        assert!(est.matrix().hermiticity_error() < 1e-15);
        acc = &acc + est.matrix();
    }
    let mean = acc.scale_real(1.0 / n as f64);
    assert!(mean.max_abs_diff(rho.matrix()) < 2e-3);
}

#[test]
fn tomography_is_seed_deterministic() {
    let rho = Density::maximally_mixed(3);
    let a = noisy_tomography(&rho, 0.1, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let b = noisy_tomography(&rho, 0.1, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert_eq!(a, b);
    assert!(noisy_tomography(&rho, -0.1, &mut ChaCha8Rng::seed_from_u64(3)).is_err());
}

#[test]
fn noise_model_json_and_validation() {
    let m = NoiseModel::default();
    let text = serde_json::to_string(&m).unwrap();
    assert_eq!(NoiseModel::from_json(&text).unwrap(), m);
    assert_eq!(NoiseModel::from_json("{}").unwrap(), m);
    assert!(NoiseModel::from_json("{\"readout_sigma\": -1}").is_err());
    assert!(NoiseModel::from_json("{\"bogus\": 1}").is_err());
    let swapped = r#"{"relaxation": {"enabled": true, "per_spin": [{"t1_s": 1, "t2_s": 2}]}}"#;
    assert!(matches!(NoiseModel::from_json(swapped), Err(Error::RelaxationOrder { .. })));
    assert_eq!(NoiseModel::noiseless().relaxation_times(&Molecule::tce()).unwrap(), None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn relaxation_semigroup(rho in arb_density(3), a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let mol = Molecule::tce();
        let two = relaxation_step(&relaxation_step(&rho, a, &mol).unwrap(), b, &mol).unwrap();
        let one = relaxation_step(&rho, a + b, &mol).unwrap();
        prop_assert!(two.matrix().max_abs_diff(one.matrix()) < 1e-10);
        prop_assert!((one.trace() - 1.0).abs() < 1e-12);
        prop_assert!(one.eigenvalues()[0] > -1e-12);
    }
}
