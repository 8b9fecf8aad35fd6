use nalgebra::{DMatrix, DVector};

use super::{argmax_abs, check_shapes, residual, PathStep, SolverPath, StopCriteria, StopReason};
use crate::error::{Error, Result};
use crate::linalg::OrthoState;

/// Orthogonal matching pursuit.
///
/// Step `t` adds the column most correlated with the residual `r_{t-1}`
/// (lowest index on ties) and refits by projecting `x` onto the selected
/// columns. The selected set is kept as an incremental QR factorization, so
/// each step costs one correlation sweep plus an `O(m t)` update.
pub fn omp_path(x_mat: &DMatrix<f64>, x: &DVector<f64>, stop: &StopCriteria) -> Result<SolverPath> {
    check_shapes(x_mat, x)?;
    stop.validate()?;
    let n = x_mat.ncols();

    let mut corr = x_mat.tr_mul(x);
    let initial = corr.amax();
    if initial <= stop.orthogonality_tol {
        return Err(Error::OrthogonalInput);
    }

    let mut used = vec![false; n];
    let mut state = OrthoState::new(x_mat.nrows());
    let mut steps = Vec::new();
    let cap = stop.max_sparsity.min(n);

    let stop_reason = loop {
        let Some((pick, _)) = argmax_abs(&corr, &used) else {
            break StopReason::NearOrthogonal;
        };
        if !state.push(pick, x_mat.column(pick)) {
            break StopReason::RankBoundary;
        }
        used[pick] = true;

        let beta = state.coefficients(x);
        let r = residual(x_mat, x, state.selected(), beta.as_slice());
        let r_norm = r.norm();
        steps.push(PathStep {
            selected: state.selected().to_vec(),
            coefficients: beta.as_slice().to_vec(),
            residual_norm: r_norm,
            lasso: None,
        });

        corr = x_mat.tr_mul(&r);
        if r_norm < stop.residual_tol {
            break StopReason::ResidualSmall;
        }
        if corr.amax() <= stop.orthogonality_tol {
            break StopReason::NearOrthogonal;
        }
        if steps.len() >= cap {
            break if steps.len() >= stop.max_sparsity {
                StopReason::IterationCap
            } else {
                StopReason::NearOrthogonal
            };
        }
    };

    Ok(SolverPath {
        steps,
        stop_reason,
        breakpoints: Vec::new(),
    })
}
