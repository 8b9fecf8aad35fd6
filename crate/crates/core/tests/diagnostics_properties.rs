mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::DVector;
use proptest::prelude::*;
use src_core::diagnostics::{angle_condition_scan, dominance_certifies_label, ScanConfig};
use src_core::harness::prepare_replicate;
use src_core::linalg::{principal_angle, DenseMatrix};
use src_core::synth::{cone_model, subspace_model, ConeModel, SubspaceModel};
use src_core::{decompose_errors, dominance_report, src_classify, LabeledDataset, SolverKind, StopCriteria};

use common::{gaussian, instance, labels, rng};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn report_flags_follow_their_definitions(seed in any::<u64>(), m in 2usize..10, n in 2usize..16, k in 1usize..5, y in 1usize..5) {
        let (x_mat, x) = instance(seed, m, n);
        let k = k.min(n);
        let y = y.min(k);
        let mut r = rng(seed ^ 5);
        let lab = labels(&mut r, n, k);
        let beta = gaussian(&mut r, n, 1).column(0).clone_owned();
        let rep = dominance_report(&x_mat, &beta, &lab, k, y, &x).unwrap();
        let mask = |keep: &dyn Fn(usize) -> bool| {
            &x_mat * DVector::from_fn(n, |i, _| if keep(lab[i]) { beta[i] } else { 0.0 })
        };
        let own = mask(&|l| l == y).norm();
        prop_assert!((rep.own_norm - own).abs() < 1e-12);
        for c in 1..=k {
            prop_assert!((rep.complement_norms[c - 1] - mask(&|l| l != c).norm()).abs() < 1e-12);
        }
        prop_assert_eq!(rep.dominates, rep.complement_norms[y - 1] < rep.own_norm);
        let pos = (1..=k).all(|c| c == y || rep.own_norm <= rep.complement_norms[c - 1]);
        prop_assert_eq!(rep.positively_dominates, pos);
        // Two classes: the only rival complement is the own contribution.
        if k == 2 && rep.dominates {
            prop_assert!(rep.positively_dominates);
        }
    }

    #[test]
    fn dominance_with_positive_dominance_is_never_misclassified(seed in any::<u64>(), m in 3usize..12, n in 3usize..24, k in 2usize..6) {
        let (x_mat, x) = instance(seed, m, n);
        let k = k.min(n);
        let lab = labels(&mut rng(seed ^ 6), n, k);
        for kind in SolverKind::SUBSET {
            let path = kind.solve(&x_mat, &x, &StopCriteria::default()).unwrap();
            for step in &path.steps {
                let beta = step.dense_coefficients(n);
                let d = src_classify(&x_mat, &beta, &lab, k, &x).unwrap();
                for y in 1..=k {
                    let rep = dominance_report(&x_mat, &beta, &lab, k, y, &x).unwrap();
                    prop_assert!(dominance_certifies_label(&rep, &d, y));
                }
            }
        }
    }

    #[test]
    fn decomposition_ignores_record_order(records in prop::collection::vec((any::<bool>(), any::<bool>()), 1..200), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let a = decompose_errors(&records).unwrap();
        let mut shuffled = records.clone();
        shuffled.shuffle(&mut rng(seed));
        let b = decompose_errors(&shuffled).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.identity_holds_exactly());
        prop_assert!(a.identity_gap() < 1e-15);
        for v in [a.l, a.p_d, a.p1, a.p2] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let wrong = records.iter().filter(|r| !r.1).count();
        prop_assert_eq!(a.l, wrong as f64 / records.len() as f64);
    }
}

/// Both sides of the angle certificate on full-rank OMP supports.
#[test]
fn angle_certificate_agrees_with_dominance() {
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 100 {
        seed += 1;
        let (x_mat, x) = instance(seed, 12, 20);
        let lab = labels(&mut rng(seed), 20, 3);
        let path = SolverKind::Omp.solve(&x_mat, &x, &StopCriteria::with_max_sparsity(6)).unwrap();
        let step = path.steps.last().unwrap();
        let beta = step.dense_coefficients(20);
        let y = lab[step.selected[0]];
        let rep = dominance_report(&x_mat, &beta, &lab, 3, y, &x).unwrap();
        // Angles straight from the definition of the cosine.
        let own = &x_mat * DVector::from_fn(20, |i, _| if lab[i] == y { beta[i] } else { 0.0 });
        let other = &x_mat * &beta - &own;
        let angle = |v: &DVector<f64>| {
            if v.norm() == 0.0 {
                FRAC_PI_2
            } else {
                (x.dot(v).abs() / v.norm()).min(1.0).acos()
            }
        };
        let (a_own, a_other) = (angle(&own), angle(&other));
        assert!((a_own - rep.angle_own).abs() < 1e-10 && (a_other - rep.angle_other).abs() < 1e-10);
        if (a_own - a_other).abs() < 1e-10 || (own.norm() - other.norm()).abs() < 1e-10 {
            continue;
        }
        assert_eq!(rep.dominates, a_own < a_other, "seed {seed}");
        checked += 1;
    }
}

/// Non-negative two-class data with unconstrained OMP: dominance should give
/// the right label. Counterexamples are reported rather than failed.
#[test]
fn nonnegative_two_class_dominance() {
    let model = ConeModel {
        classes: 2,
        dim: 10,
        within_angle: 20f64.to_radians(),
        between_angle: FRAC_PI_2,
        per_class: 40,
        nonnegative: true,
    };
    let (mut dominant, mut counter) = (0, 0);
    for seed in 0..5 {
        let data = model.generate(seed).unwrap();
        let rep = prepare_replicate(&data, 0.5, seed).unwrap();
        let x_mat = rep.train.features.as_matrix();
        for t in 0..rep.test.n_obs() {
            let x = rep.test.features.column(t).clone_owned();
            let y = rep.test.labels[t];
            let path = SolverKind::Omp.solve(x_mat, &x, &StopCriteria::with_max_sparsity(5)).unwrap();
            for step in &path.steps {
                let beta = step.dense_coefficients(x_mat.ncols());
                let r = dominance_report(x_mat, &beta, &rep.train.labels, 2, y, &x).unwrap();
                if r.dominates {
                    dominant += 1;
                    if src_classify(x_mat, &beta, &rep.train.labels, 2, &x).unwrap().label != y {
                        counter += 1;
                    }
                }
            }
        }
    }
    eprintln!("non-negative K=2: {dominant} dominant instances, {counter} misclassified");
    assert!(dominant > 0);
}

#[test]
fn decomposition_examples() {
    let mut records = vec![(true, true); 89];
    records.push((true, false));
    records.extend(std::iter::repeat_n((false, false), 6));
    records.extend(std::iter::repeat_n((false, true), 4));
    let d = decompose_errors(&records).unwrap();
    assert_eq!((d.p_d, d.p1, d.p2), (0.9, 1.0 / 90.0, 0.6));
    assert!((d.l - 0.07).abs() < 1e-15);
    assert!(d.identity_holds_exactly());

    let d = decompose_errors(&[(true, true); 10]).unwrap();
    assert_eq!((d.l, d.p_d, d.p1, d.p2), (0.0, 1.0, 0.0, 0.0));
    assert_eq!(decompose_errors(&[]), Err(src_core::Error::EmptyInput));
}

fn dataset(columns: &[&[f64]], labels: Vec<usize>, k: usize) -> LabeledDataset {
    let cols: Vec<DVector<f64>> = columns.iter().map(|c| DVector::from_row_slice(c)).collect();
    LabeledDataset::new(DenseMatrix::from_columns(&cols).unwrap(), labels, k, "t").unwrap()
}

#[test]
fn scan_on_orthogonal_single_columns() {
    let train = dataset(&[&[1.0, 0.0], &[0.0, 1.0]], vec![1, 2], 2);
    let test = dataset(&[&[1.0, 0.0]], vec![1], 1);
    let report = angle_condition_scan(&train, &test, &ScanConfig::new(vec![0.1, 0.7, 1.5], 1)).unwrap();
    let p = &report.pairs[0];
    assert_eq!((p.nearest_within, p.between), (0.0, FRAC_PI_2));
    assert_eq!(p.strict, vec![true; 3]);
    assert_eq!(report.q_nearest, 1.0);
}

#[test]
fn scan_fails_when_the_copies_are_mislabeled() {
    let train = dataset(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]], vec![2, 2, 1], 2);
    let test = dataset(&[&[1.0, 0.0]], vec![1], 1);
    let grid: Vec<f64> = (0..15).map(|i| i as f64 * 0.1).collect();
    let report = angle_condition_scan(&train, &test, &ScanConfig::new(grid, 1)).unwrap();
    assert_eq!((report.q_strict, report.q_nearest, report.q_extended), (0.0, 0.0, 0.0));
}

#[test]
fn scan_rejects_empty_training_classes() {
    let train = dataset(&[&[1.0, 0.0]], vec![1], 2);
    let test = dataset(&[&[1.0, 0.0]], vec![1], 1);
    assert!(matches!(
        angle_condition_scan(&train, &test, &ScanConfig::new(vec![0.5], 1)),
        Err(src_core::Error::InsufficientData(_))
    ));
}

#[test]
fn noiseless_orthogonal_subspaces_satisfy_the_condition() {
    let model = SubspaceModel {
        classes: 3,
        dim: 9,
        subspace_dim: 2,
        per_class: 60,
        noise_sigma: 0.0,
    };
    let data = model.generate(4).unwrap();
    let bases = model.bases(4).unwrap();
    // Smallest principal angle between distinct class subspaces.
    let mut min_between = FRAC_PI_2;
    for (a, ba) in bases.iter().enumerate() {
        for (b, bb) in bases.iter().enumerate() {
            if a != b {
                for v in ba.column_iter() {
                    min_between = min_between.min(principal_angle(&v.clone_owned(), bb).unwrap());
                }
            }
        }
    }
    assert!((min_between - FRAC_PI_2).abs() < 1e-10);
    let rep = prepare_replicate(&data, 0.5, 1).unwrap();
    for s in 1..=2 {
        let report = angle_condition_scan(&rep.train, &rep.test, &ScanConfig::new(vec![min_between / 2.0], s)).unwrap();
        assert_eq!(report.q_nearest, 1.0, "s = {s}");
    }
}

#[test]
fn cone_data_satisfies_the_condition_at_thirty_degrees() {
    let data = cone_model(5, 20, 5f64.to_radians(), FRAC_PI_2, 20, 7).unwrap();
    let rep = prepare_replicate(&data, 0.5, 7).unwrap();
    let report = angle_condition_scan(&rep.train, &rep.test, &ScanConfig::new(vec![30f64.to_radians()], 1)).unwrap();
    assert_eq!(report.q_strict, 1.0);
    assert_eq!(report.q_nearest, 1.0);
}

#[test]
fn scan_is_reproducible_and_sampling_is_recorded() {
    let data = subspace_model(3, 12, 3, 30, 0.05, 2).unwrap();
    let rep = prepare_replicate(&data, 0.5, 2).unwrap();
    let mut cfg = ScanConfig::new(vec![0.2, FRAC_PI_4], 3);
    cfg.samples = 50;
    cfg.seed = 9;
    let a = angle_condition_scan(&rep.train, &rep.test, &cfg).unwrap();
    let b = angle_condition_scan(&rep.train, &rep.test, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.samples, 50);
    assert!(a.pairs.iter().all(|p| !p.exhaustive));
}
