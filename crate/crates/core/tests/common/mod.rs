//! Independent reference implementations and random instances shared by the
//! integration tests. Nothing here uses the library's solvers.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random `m x n` matrix with unit columns and a unit observation.
pub fn instance(seed: u64, m: usize, n: usize) -> (DMatrix<f64>, DVector<f64>) {
    let mut r = rng(seed);
    let mut x_mat = gaussian(&mut r, m, n);
    for mut c in x_mat.column_iter_mut() {
        let norm = c.norm();
        c /= norm;
    }
    let x = gaussian(&mut r, m, 1).column(0).normalize();
    (x_mat, x)
}

/// Least-squares coefficients on the listed columns via an explicit
/// pseudo-inverse.
pub fn pinv_refit(x_mat: &DMatrix<f64>, selected: &[usize], x: &DVector<f64>) -> DVector<f64> {
    let sub = x_mat.select_columns(selected);
    let pinv = sub.pseudo_inverse(1e-12).expect("pseudo-inverse");
    pinv * x
}

/// Greedy pursuit with a full pseudo-inverse refit at every step and the same
/// stopping rules as the library: `s` steps, `||r|| < eps`, or every
/// correlation at most `eps_orth`.
pub fn naive_omp(x_mat: &DMatrix<f64>, x: &DVector<f64>, s: usize, eps: f64, eps_orth: f64) -> Vec<usize> {
    let mut selected: Vec<usize> = Vec::new();
    let mut r = x.clone();
    while selected.len() < s.min(x_mat.ncols()) {
        let corr = x_mat.transpose() * &r;
        if corr.iter().all(|c| c.abs() <= eps_orth) {
            break;
        }
        let mut best: Option<usize> = None;
        for i in 0..x_mat.ncols() {
            if selected.contains(&i) {
                continue;
            }
            if best.is_none_or(|b| corr[i].abs() > corr[b].abs()) {
                best = Some(i);
            }
        }
        let Some(pick) = best else { break };
        selected.push(pick);
        let beta = pinv_refit(x_mat, &selected, x);
        r = x - x_mat.select_columns(&selected) * beta;
        if r.norm() < eps {
            break;
        }
    }
    selected
}

fn soft(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// Cyclic coordinate descent for `min ||x - X b||^2 / 2 + lambda ||b||_1`,
/// iterated until no coordinate moves by more than `tol` in a sweep.
pub fn cd_lasso(x_mat: &DMatrix<f64>, x: &DVector<f64>, lambda: f64, tol: f64) -> DVector<f64> {
    let n = x_mat.ncols();
    let norms: Vec<f64> = x_mat.column_iter().map(|c| c.norm_squared()).collect();
    let mut beta = DVector::zeros(n);
    let mut r = x.clone();
    for _ in 0..1_000_000 {
        let mut max_change = 0.0_f64;
        for j in 0..n {
            let col = x_mat.column(j);
            let old = beta[j];
            let rho = col.dot(&r) + norms[j] * old;
            let new = soft(rho, lambda) / norms[j];
            if new != old {
                r.axpy(old - new, &col, 1.0);
                beta[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        if max_change < tol {
            break;
        }
    }
    beta
}

/// `(X^T X)^{-1} X^T x` through a Cholesky factorization.
pub fn normal_equations(x_mat: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let gram = x_mat.transpose() * x_mat;
    gram.cholesky().expect("full column rank").solve(&(x_mat.transpose() * x))
}

/// Random labels covering `1..=k`.
pub fn labels(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|i| if i < k { i + 1 } else { rng.random_range(1..=k) }).collect()
}
