use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use super::{check_shapes, residual, PathStep, SolverPath, StopCriteria, StopReason};
use crate::error::{Error, Result};
use crate::linalg::OrthoState;

/// Indices of the `s` largest `|corr_i|`, in decreasing order, lowest index
/// first on ties.
///
/// Uses a linear-time selection followed by a sort of the selected prefix, so
/// the cost is `O(n + s log s)` on top of the `O(mn)` correlation sweep.
pub fn top_correlations(corr: &DVector<f64>, s: usize) -> Vec<usize> {
    let n = corr.len();
    let s = s.min(n);
    if s == 0 {
        return Vec::new();
    }
    let order = |&a: &usize, &b: &usize| -> Ordering {
        corr[b]
            .abs()
            .partial_cmp(&corr[a].abs())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    };
    let mut idx: Vec<usize> = (0..n).collect();
    if s < n {
        idx.select_nth_unstable_by(s - 1, order);
        idx.truncate(s);
    }
    idx.sort_unstable_by(order);
    idx
}

/// Marginal regression: picks the columns most correlated with `x` in one
/// pass, then refits least squares on each prefix of that ranking.
///
/// If a prefix becomes numerically rank deficient the path stops at the last
/// full-rank prefix with [`StopReason::RankBoundary`]. The residual-orthogonality
/// criterion is not checked: it would need a fresh correlation sweep per
/// step, which is exactly what this method avoids.
pub fn marginal_path(x_mat: &DMatrix<f64>, x: &DVector<f64>, stop: &StopCriteria) -> Result<SolverPath> {
    check_shapes(x_mat, x)?;
    stop.validate()?;
    let corr = x_mat.tr_mul(x);
    if corr.amax() <= stop.orthogonality_tol {
        return Err(Error::OrthogonalInput);
    }
    let order = top_correlations(&corr, stop.max_sparsity);

    let mut state = OrthoState::new(x_mat.nrows());
    let mut steps = Vec::with_capacity(order.len());
    let mut stop_reason = if order.len() >= stop.max_sparsity {
        StopReason::IterationCap
    } else {
        StopReason::NearOrthogonal
    };
    for &i in &order {
        if !state.push(i, x_mat.column(i)) {
            stop_reason = StopReason::RankBoundary;
            break;
        }
        let beta = state.coefficients(x);
        let r_norm = residual(x_mat, x, state.selected(), beta.as_slice()).norm();
        steps.push(PathStep {
            selected: state.selected().to_vec(),
            coefficients: beta.as_slice().to_vec(),
            residual_norm: r_norm,
            lasso: None,
        });
        if r_norm < stop.residual_tol {
            stop_reason = StopReason::ResidualSmall;
            break;
        }
    }
    Ok(SolverPath {
        steps,
        stop_reason,
        breakpoints: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_follows_sorted_magnitudes() {
        let corr = DVector::from_vec(vec![0.9, -0.5, 0.7]);
        assert_eq!(top_correlations(&corr, 3), vec![0, 2, 1]);
        assert_eq!(top_correlations(&corr, 2), vec![0, 2]);
        let tied = DVector::from_vec(vec![0.2, -0.8, 0.8, 0.1]);
        assert_eq!(top_correlations(&tied, 2), vec![1, 2]);
    }

    #[test]
    fn duplicate_column_hits_rank_boundary() {
        // Columns 0 and 1 are identical and most correlated with x.
        let x_mat = DMatrix::from_column_slice(
            3,
            3,
            &[0.8, 0.6, 0.0, 0.8, 0.6, 0.0, 0.0, 0.0, 1.0],
        );
        let x = DVector::from_vec(vec![0.6, 0.6, 0.529_150_262_212_918]);
        let path = marginal_path(&x_mat, &x, &StopCriteria::default()).unwrap();
        assert_eq!(path.len(), 1);
        assert_eq!(path.first_index(), Some(0));
        assert_eq!(path.stop_reason, StopReason::RankBoundary);
    }
}
