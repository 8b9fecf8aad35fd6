use std::f64::consts::FRAC_PI_2;

use proptest::prelude::*;
use src_core::harness::bench::solver_outcomes;
use src_core::harness::prepare_replicate;
use src_core::linalg::{numerical_rank, principal_angle};
use src_core::synth::{cone_model, subspace_model, ConeModel, SubspaceModel};
use src_core::{Error, LabeledDataset, SolverKind};

fn pair_angle(data: &LabeledDataset, i: usize, j: usize) -> f64 {
    let x = data.features.as_matrix();
    let cos = x.column(i).dot(&x.column(j)).clamp(-1.0, 1.0);
    cos.acos()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generators_are_deterministic(seed in any::<u64>()) {
        let a = subspace_model(3, 10, 2, 5, 0.1, seed).unwrap();
        let b = subspace_model(3, 10, 2, 5, 0.1, seed).unwrap();
        prop_assert_eq!(a.features.as_matrix().as_slice(), b.features.as_matrix().as_slice());
        let a = cone_model(3, 10, 0.1, 1.2, 5, seed).unwrap();
        let b = cone_model(3, 10, 0.1, 1.2, 5, seed).unwrap();
        prop_assert_eq!(a.features.as_matrix().as_slice(), b.features.as_matrix().as_slice());
        prop_assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn noiseless_class_blocks_have_the_subspace_rank(seed in any::<u64>(), k in 1usize..4, d in 1usize..4, per in 1usize..8) {
        let m = 12;
        let model = SubspaceModel { classes: k, dim: m, subspace_dim: d, per_class: per, noise_sigma: 0.0 };
        let data = model.generate(seed).unwrap();
        let bases = model.bases(seed).unwrap();
        prop_assert!(data.normalized);
        for c in 1..=k {
            let idx: Vec<usize> = (0..data.n_obs()).filter(|&i| data.labels[i] == c).collect();
            let block = data.features.as_matrix().select_columns(&idx);
            prop_assert_eq!(numerical_rank(&block, None), d.min(per));
            for &i in &idx {
                let x = data.features.column(i).clone_owned();
                prop_assert!(principal_angle(&x, &bases[c - 1]).unwrap() < 1e-6);
                if k * d <= m {
                    for (o, basis) in bases.iter().enumerate() {
                        if o + 1 != c {
                            prop_assert!((principal_angle(&x, basis).unwrap() - FRAC_PI_2).abs() < 1e-8);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn cone_guarantees_hold_for_every_pair(seed in any::<u64>(), k in 2usize..5, within in 0.0f64..0.3, nonneg in any::<bool>()) {
        let between = FRAC_PI_2;
        let model = ConeModel { classes: k, dim: 8, within_angle: within, between_angle: between, per_class: 6, nonnegative: nonneg };
        let data = model.generate(seed).unwrap();
        prop_assert_eq!(data.class_counts(), vec![6; k]);
        let x = data.features.as_matrix();
        if nonneg {
            prop_assert!(x.iter().all(|v| *v >= 0.0));
        }
        for i in 0..data.n_obs() {
            prop_assert!((x.column(i).norm() - 1.0).abs() < 1e-10);
            for j in 0..i {
                let a = pair_angle(&data, i, j);
                if data.labels[i] == data.labels[j] {
                    prop_assert!(a <= 2.0 * within + 1e-7);
                } else {
                    prop_assert!(a >= between - 2.0 * within - 1e-7);
                }
            }
        }
    }
}

#[test]
fn zero_radius_cones_repeat_their_centers() {
    let model = ConeModel {
        classes: 3,
        dim: 5,
        within_angle: 0.0,
        between_angle: 1.0,
        per_class: 4,
        nonnegative: false,
    };
    let data = model.generate(1).unwrap();
    let centers = model.centers(1).unwrap();
    for i in 0..data.n_obs() {
        let c = centers.column(data.labels[i] - 1);
        assert!((data.features.column(i) - c).amax() < 1e-12);
    }
}

#[test]
fn infeasible_parameters_are_rejected() {
    for (k, m, w, b) in [(2, 5, 0.3, 0.2), (2, 5, 0.3, 1.0), (6, 5, 0.0, 1.0), (2, 5, 0.1, 2.0)] {
        assert!(matches!(cone_model(k, m, w, b, 3, 0), Err(Error::InfeasibleGeometry(_))), "{k} {m} {w} {b}");
    }
    assert!(matches!(subspace_model(2, 3, 4, 5, 0.0, 0), Err(Error::DimensionTooSmall(_))));
}

#[test]
fn two_separated_cones_are_classified_perfectly_at_one_atom() {
    for seed in 0..10 {
        let data = cone_model(2, 20, 5f64.to_radians(), FRAC_PI_2, 50, seed).unwrap();
        let rep = prepare_replicate(&data, 0.5, seed).unwrap();
        for kind in SolverKind::SUBSET {
            for o in solver_outcomes(kind, &rep, 1).unwrap() {
                assert!(o.unwrap()[0].correct, "{kind} seed {seed}");
            }
        }
    }
}
