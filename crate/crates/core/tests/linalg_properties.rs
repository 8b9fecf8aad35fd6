mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use src_core::linalg::{least_squares_minnorm, normalize_columns, numerical_rank, principal_angle, OrthoState};

use common::{gaussian, rng};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn least_squares_residual_is_orthogonal_to_columns(seed in any::<u64>(), m in 2usize..12, n in 1usize..12, dup in any::<bool>()) {
        let mut r = rng(seed);
        let mut a = gaussian(&mut r, m, n);
        if dup && n > 1 {
            let c = a.column(0).clone_owned();
            a.set_column(n - 1, &(c * 2.0));
        }
        let b = gaussian(&mut r, m, 1).column(0).clone_owned();
        let beta = least_squares_minnorm(&a, &b).unwrap();
        let res = &b - &a * &beta;
        let scale = b.norm().max(1.0);
        for c in a.column_iter() {
            prop_assert!(c.dot(&res).abs() < 1e-8 * scale);
        }
    }

    #[test]
    fn principal_angle_depends_only_on_the_span(seed in any::<u64>(), m in 3usize..10, k in 1usize..4) {
        let k = k.min(m - 1);
        let mut r = rng(seed);
        let basis = gaussian(&mut r, m, k);
        let x = gaussian(&mut r, m, 1).column(0).clone_owned();
        let angle = principal_angle(&x, &basis).unwrap();
        let mut perm: Vec<usize> = (0..k).rev().collect();
        perm.rotate_left(k / 2);
        let mut other = basis.select_columns(&perm);
        for (j, mut c) in other.column_iter_mut().enumerate() {
            c *= 0.25 + j as f64 * 3.5;
        }
        prop_assert!((principal_angle(&x, &other).unwrap() - angle).abs() < 1e-10);
        prop_assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&angle));
    }

    #[test]
    fn normalize_columns_is_idempotent(seed in any::<u64>(), m in 1usize..8, n in 1usize..8) {
        let a = gaussian(&mut rng(seed), m, n);
        let once = normalize_columns(&a).unwrap();
        let twice = normalize_columns(&once).unwrap();
        prop_assert!((&once - &twice).amax() < 1e-15);
        for c in once.column_iter() {
            prop_assert!((c.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_of_transpose_matches(seed in any::<u64>(), target in 1usize..=7) {
        let mut r = rng(seed);
        let m = gaussian(&mut r, 10, target) * gaussian(&mut r, target, 7);
        let rank = numerical_rank(&m, None);
        prop_assert_eq!(rank, target);
        prop_assert_eq!(rank, numerical_rank(&m.transpose(), None));
    }

    #[test]
    fn incremental_basis_matches_batch_projection(seed in any::<u64>(), m in 3usize..10, k in 1usize..5) {
        let k = k.min(m);
        let mut r = rng(seed);
        let a = gaussian(&mut r, m, k);
        let b = gaussian(&mut r, m, 1).column(0).clone_owned();
        let idx: Vec<usize> = (0..k).collect();
        let state = OrthoState::from_columns(&a, &idx).unwrap();
        prop_assert!(state.orthogonality_defect() < 1e-12);
        let beta = state.coefficients(&b);
        let direct = least_squares_minnorm(&a, &b).unwrap();
        prop_assert!((&beta - &direct).amax() < 1e-8);
    }
}

#[test]
fn zero_column_is_reported_by_index() {
    let a = DMatrix::from_column_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    assert_eq!(normalize_columns(&a), Err(src_core::Error::ZeroColumn(1)));
}

#[test]
fn angle_to_a_line() {
    let x = DVector::from_vec(vec![1.0, 1.0]);
    let m = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
    assert!((principal_angle(&x, &m).unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
}
