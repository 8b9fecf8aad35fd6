mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use src_core::solvers::{full_regression, homotopy_path, lasso_kkt_violation, marginal_path, omp_path};
use src_core::{SolverKind, SolverPath, StopCriteria, StopReason};

use common::{cd_lasso, instance, naive_omp, normal_equations};

fn unique_argmax(x_mat: &DMatrix<f64>, x: &DVector<f64>) -> bool {
    let mut c: Vec<f64> = (x_mat.transpose() * x).iter().map(|v| v.abs()).collect();
    c.sort_by(|a, b| b.partial_cmp(a).unwrap());
    c.len() < 2 || c[0] - c[1] > 1e-12
}

fn check_reproduced_residuals(x_mat: &DMatrix<f64>, x: &DVector<f64>, path: &SolverPath) -> Result<(), TestCaseError> {
    for step in &path.steps {
        let beta = step.dense_coefficients(x_mat.ncols());
        let direct = (x - x_mat * &beta).norm();
        prop_assert!((direct - step.residual_norm).abs() < 1e-8);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn omp_residuals_are_orthogonal_and_shrinking(seed in any::<u64>(), m in 3usize..15, n in 2usize..25) {
        let (x_mat, x) = instance(seed, m, n);
        let path = omp_path(&x_mat, &x, &StopCriteria::default()).unwrap();
        let mut seen = std::collections::HashSet::new();
        for i in path.selection_order() {
            prop_assert!(seen.insert(i));
        }
        let mut prev = x.norm();
        for step in &path.steps {
            let beta = step.dense_coefficients(n);
            let r = &x - &x_mat * &beta;
            for &j in &step.selected {
                prop_assert!(x_mat.column(j).dot(&r).abs() < 1e-8);
            }
            prop_assert!(step.residual_norm < prev);
            prev = step.residual_norm;
        }
        check_reproduced_residuals(&x_mat, &x, &path)?;
    }

    #[test]
    fn homotopy_breakpoints_are_lasso_solutions(seed in any::<u64>(), m in 3usize..12, n in 2usize..20) {
        let (x_mat, x) = instance(seed, m, n);
        let path = homotopy_path(&x_mat, &x, &StopCriteria::default()).unwrap();
        for w in path.breakpoints.windows(2) {
            prop_assert!(w[1].lambda < w[0].lambda);
        }
        for bp in &path.breakpoints {
            prop_assert!(lasso_kkt_violation(&x_mat, &x, bp) < 1e-8);
        }
        for w in path.breakpoints.windows(2) {
            prop_assert!(w[1].residual_norm <= w[0].residual_norm + 1e-12);
        }
        check_reproduced_residuals(&x_mat, &x, &path)?;
        for (k, step) in path.steps.iter().enumerate() {
            prop_assert_eq!(step.sparsity(), k + 1);
        }
    }

    #[test]
    fn marginal_selection_matches_a_full_sort(seed in any::<u64>(), m in 3usize..12, n in 2usize..30, s in 1usize..10) {
        let (x_mat, x) = instance(seed, m, n);
        let corr = x_mat.transpose() * &x;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| corr[b].abs().partial_cmp(&corr[a].abs()).unwrap().then(a.cmp(&b)));
        let path = marginal_path(&x_mat, &x, &StopCriteria::with_max_sparsity(s)).unwrap();
        let sel = path.selection_order();
        prop_assert_eq!(&sel[..], &order[..sel.len()]);
        if path.stop_reason == StopReason::IterationCap {
            prop_assert_eq!(sel.len(), s);
        }
        check_reproduced_residuals(&x_mat, &x, &path)?;
    }

    #[test]
    fn subset_methods_share_the_first_index(seed in any::<u64>(), m in 2usize..12, n in 1usize..30) {
        let (x_mat, x) = instance(seed, m, n);
        prop_assume!(unique_argmax(&x_mat, &x));
        let stop = StopCriteria::default();
        let first: Vec<Option<usize>> = SolverKind::SUBSET
            .iter()
            .map(|k| k.solve(&x_mat, &x, &stop).unwrap().first_index())
            .collect();
        prop_assert!(first.iter().all(|f| *f == first[0]));
    }

    #[test]
    fn omp_matches_the_greedy_oracle(seed in any::<u64>(), m in 3usize..10, n in 3usize..15) {
        let (x_mat, x) = instance(seed, m, n);
        let path = omp_path(&x_mat, &x, &StopCriteria::default()).unwrap();
        prop_assert_eq!(path.selection_order(), naive_omp(&x_mat, &x, 100, 1e-8, 1e-8));
    }

    #[test]
    fn sliced_paths_match_per_level_recomputation(seed in any::<u64>(), m in 4usize..10, n in 4usize..16) {
        let (x_mat, x) = instance(seed, m, n);
        let stop = StopCriteria::default();
        for kind in [SolverKind::Omp, SolverKind::Marginal] {
            let path = kind.solve(&x_mat, &x, &stop).unwrap();
            for s in 1..=path.len() {
                let short = kind.solve(&x_mat, &x, &StopCriteria::with_max_sparsity(s)).unwrap();
                prop_assert_eq!(&short.steps.last().unwrap().selected, &path.at_sparsity(s).unwrap().selected);
            }
        }
        // Homotopy: the capped run stops the first time the active set
        // reaches size s, the sliced path keeps the last such breakpoint.
        // They agree whenever size s occurs once on the path.
        let path = homotopy_path(&x_mat, &x, &stop).unwrap();
        let sizes: Vec<usize> = path.breakpoints.iter().map(|b| b.active.len()).collect();
        for s in 1..=path.len() {
            if sizes.iter().filter(|&&z| z == s).count() > 1 {
                continue;
            }
            let short = homotopy_path(&x_mat, &x, &StopCriteria::with_max_sparsity(s)).unwrap();
            let mut a = short.steps.last().unwrap().selected.clone();
            let mut b = path.at_sparsity(s).unwrap().selected.clone();
            a.sort_unstable();
            b.sort_unstable();
            prop_assert_eq!(a, b);
        }
    }
}

#[test]
fn homotopy_agrees_with_coordinate_descent_on_a_grid() {
    for seed in 0..20 {
        let (x_mat, x) = instance(1000 + seed, 10, 15);
        let path = homotopy_path(&x_mat, &x, &StopCriteria::default()).unwrap();
        let lambda_max = (x_mat.transpose() * &x).amax();
        for g in 1..=10 {
            let lambda = lambda_max * (1.0 - g as f64 / 11.0);
            let from_path = path.lasso_at(lambda, 15).unwrap();
            let oracle = cd_lasso(&x_mat, &x, lambda, 1e-13);
            assert!((from_path - oracle).amax() < 1e-6, "seed {seed} lambda {lambda}");
        }
    }
}

#[test]
fn full_regression_matches_normal_equations() {
    for seed in 0..20 {
        let (x_mat, x) = instance(seed, 8, 5);
        let fit = full_regression(&x_mat, &x).unwrap();
        assert!(fit.full_rank);
        assert!((&fit.coefficients - normal_equations(&x_mat, &x)).amax() < 1e-8);
    }
}

#[test]
fn rank_deficient_full_regression_is_flagged() {
    let (mut x_mat, x) = instance(3, 8, 5);
    let c = x_mat.column(0).clone_owned();
    x_mat.set_column(4, &c);
    let fit = full_regression(&x_mat, &x).unwrap();
    assert!(!fit.full_rank);
    let r = &x - &x_mat * &fit.coefficients;
    assert!((x_mat.transpose() * r).amax() < 1e-10);
    // Minimum norm splits the weight evenly between the duplicates.
    assert!((fit.coefficients[0] - fit.coefficients[4]).abs() < 1e-10);
}

#[test]
fn stop_criteria_validation() {
    assert!(StopCriteria::new(0, 1e-8, 1e-8).is_err());
    assert!(StopCriteria::new(3, -1.0, 1e-8).is_err());
    let d = StopCriteria::default();
    assert_eq!((d.max_sparsity, d.residual_tol, d.orthogonality_tol), (100, 1e-8, 1e-8));
}
