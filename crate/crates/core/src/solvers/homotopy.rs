use nalgebra::{DMatrix, DVector};

use super::{argmax_abs, check_shapes, residual, LassoPoint, PathStep, SolverPath, StopCriteria, StopReason};
use crate::error::{Error, Result};
use crate::linalg::OrthoState;

/// Denominators this close to zero mean the correlation moves in lockstep
/// with the penalty and never crosses it.
const DENOM_TOL: f64 = 1e-12;

/// Step lengths at or below `GAMMA_RTOL * lambda_0` are treated as zero.
const GAMMA_RTOL: f64 = 1e-13;

enum Event {
    Insert(usize),
    Delete(usize),
    End,
}

/// l1 homotopy: follows the lasso solution of
/// `min ||x - X b||^2 / 2 + lambda ||b||_1` from `lambda = max |X^T x|` down to
/// zero, with both insertion and deletion breakpoints.
///
/// Steps are recorded per active-set size. After a deletion the records for
/// larger sizes are discarded, so step `k` always holds the latest visit to
/// size `k`. The step coefficients are the least-squares fit on the active
/// set; the penalized breakpoint solution is kept in [`PathStep::lasso`].
pub fn homotopy_path(x_mat: &DMatrix<f64>, x: &DVector<f64>, stop: &StopCriteria) -> Result<SolverPath> {
    check_shapes(x_mat, x)?;
    stop.validate()?;
    let n = x_mat.ncols();
    let m = x_mat.nrows();

    let c0 = x_mat.tr_mul(x);
    let (first, lambda0) = argmax_abs(&c0, &[]).ok_or(Error::EmptyTrainingSet)?;
    if lambda0 <= stop.orthogonality_tol {
        return Err(Error::OrthogonalInput);
    }
    let tiny = GAMMA_RTOL * lambda0;

    let mut lambda = lambda0;
    let mut active = vec![first];
    let mut signs = vec![c0[first].signum()];
    let mut beta = vec![0.0];
    let mut in_active = vec![false; n];
    in_active[first] = true;
    let mut state = OrthoState::from_columns(x_mat, &active)
        .ok_or_else(|| Error::NumericalBreakdown("first column is degenerate".into()))?;

    let mut breakpoints = Vec::new();
    let mut records = Vec::new();
    let point = lasso_point(x_mat, x, &active, &beta, lambda);
    records.push(step_from(x_mat, x, &state, point.clone()));
    breakpoints.push(point);

    let mut just_removed: Option<usize> = None;

    let stop_reason = loop {
        if let Some(reason) = check_stop(records.last().unwrap(), lambda, active.len(), stop) {
            break reason;
        }

        let direction = state.solve_gram(&signs);
        if direction.iter().any(|d| !d.is_finite()) {
            return Err(Error::NumericalBreakdown("singular active Gram matrix".into()));
        }
        let mut u = DVector::zeros(x_mat.nrows());
        for (&j, &d) in active.iter().zip(direction.iter()) {
            u.axpy(d, &x_mat.column(j), 1.0);
        }
        let a = x_mat.tr_mul(&u);
        let r = residual(x_mat, x, &active, &beta);
        let c = x_mat.tr_mul(&r);

        let mut gamma = lambda;
        let mut event = Event::End;
        // Once the active columns span the whole space the residual shrinks
        // along them to zero and nothing else can enter.
        let saturated = state.rank() >= m;
        for i in 0..n {
            if saturated || in_active[i] {
                continue;
            }
            let removed = Some(i) == just_removed;
            // Tied with the active set already: enters without moving, unless
            // it is a combination of the active columns.
            if !removed && c[i].abs() >= lambda - tiny && state.clone().push(i, x_mat.column(i)) {
                gamma = 0.0;
                event = Event::Insert(i);
                break;
            }
            for (side, num, den) in [(1.0, lambda - c[i], 1.0 - a[i]), (-1.0, lambda + c[i], 1.0 + a[i])] {
                // A variable that just left sits on the boundary it left
                // through; only a crossing on the opposite side counts.
                if den.abs() <= DENOM_TOL || (removed && side == c[i].signum()) {
                    continue;
                }
                let g = num / den;
                if g > tiny && g < gamma {
                    gamma = g;
                    event = Event::Insert(i);
                }
            }
        }
        for (k, (&b, &d)) in beta.iter().zip(direction.iter()).enumerate() {
            if d == 0.0 || gamma == 0.0 {
                continue;
            }
            let g = -b / d;
            if g > tiny && g < gamma {
                gamma = g;
                event = Event::Delete(k);
            }
        }

        for (b, d) in beta.iter_mut().zip(direction.iter()) {
            *b += gamma * d;
        }
        lambda = if matches!(event, Event::End) { 0.0 } else { lambda - gamma };

        // End-of-segment state for the current size.
        let point = lasso_point(x_mat, x, &active, &beta, lambda);
        *records.last_mut().unwrap() = step_from(x_mat, x, &state, point);

        match event {
            Event::End => {
                breakpoints.push(records.last().unwrap().lasso.clone().unwrap());
                let pen = breakpoints.last().unwrap().residual_norm;
                break if pen < stop.residual_tol {
                    StopReason::ResidualSmall
                } else {
                    StopReason::NearOrthogonal
                };
            }
            Event::Insert(i) => {
                let ci = c[i] - gamma * a[i];
                if !state.push(i, x_mat.column(i)) {
                    return Err(Error::NumericalBreakdown(format!(
                        "column {i} entered the active set but is dependent on it"
                    )));
                }
                active.push(i);
                signs.push(ci.signum());
                beta.push(0.0);
                in_active[i] = true;
                just_removed = None;
                let point = lasso_point(x_mat, x, &active, &beta, lambda);
                records.push(step_from(x_mat, x, &state, point.clone()));
                breakpoints.push(point);
            }
            Event::Delete(k) => {
                let removed = active.remove(k);
                signs.remove(k);
                beta.remove(k);
                in_active[removed] = false;
                just_removed = Some(removed);
                if active.is_empty() {
                    return Err(Error::NumericalBreakdown("active set became empty".into()));
                }
                state = OrthoState::from_columns(x_mat, &active).ok_or_else(|| {
                    Error::NumericalBreakdown("active set lost rank after a deletion".into())
                })?;
                records.truncate(active.len());
                let point = lasso_point(x_mat, x, &active, &beta, lambda);
                *records.last_mut().unwrap() = step_from(x_mat, x, &state, point.clone());
                breakpoints.push(point);
            }
        }
    };

    Ok(SolverPath {
        steps: records,
        stop_reason,
        breakpoints,
    })
}

fn check_stop(step: &PathStep, lambda: f64, size: usize, stop: &StopCriteria) -> Option<StopReason> {
    let pen = step.lasso.as_ref().map_or(step.residual_norm, |p| p.residual_norm);
    if pen < stop.residual_tol {
        Some(StopReason::ResidualSmall)
    } else if lambda <= stop.orthogonality_tol {
        Some(StopReason::NearOrthogonal)
    } else if size >= stop.max_sparsity {
        Some(StopReason::IterationCap)
    } else {
        None
    }
}

fn lasso_point(x_mat: &DMatrix<f64>, x: &DVector<f64>, active: &[usize], beta: &[f64], lambda: f64) -> LassoPoint {
    LassoPoint {
        lambda,
        active: active.to_vec(),
        coefficients: beta.to_vec(),
        residual_norm: residual(x_mat, x, active, beta).norm(),
    }
}

fn step_from(x_mat: &DMatrix<f64>, x: &DVector<f64>, state: &OrthoState, point: LassoPoint) -> PathStep {
    let coefficients = state.coefficients(x);
    let residual_norm = residual(x_mat, x, state.selected(), coefficients.as_slice()).norm();
    PathStep {
        selected: state.selected().to_vec(),
        coefficients: coefficients.as_slice().to_vec(),
        residual_norm,
        lasso: Some(point),
    }
}

/// Largest violation of the lasso optimality conditions at `point`:
/// `x_j^T r = lambda * sign(b_j)` on the support, `|x_j^T r| <= lambda` off it.
pub fn lasso_kkt_violation(x_mat: &DMatrix<f64>, x: &DVector<f64>, point: &LassoPoint) -> f64 {
    let r = residual(x_mat, x, &point.active, &point.coefficients);
    let c = x_mat.tr_mul(&r);
    let lambda = point.lambda;
    let mut worst = 0.0_f64;
    let mut on_support = vec![false; x_mat.ncols()];
    for (&j, &b) in point.active.iter().zip(&point.coefficients) {
        on_support[j] = true;
        let v = if b != 0.0 {
            (c[j] - lambda * b.signum()).abs()
        } else {
            (c[j].abs() - lambda).abs()
        };
        worst = worst.max(v);
    }
    for (i, &ci) in c.iter().enumerate() {
        if !on_support[i] {
            worst = worst.max(ci.abs() - lambda);
        }
    }
    worst
}
