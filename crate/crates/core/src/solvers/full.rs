use nalgebra::{DMatrix, DVector};

use super::{check_shapes, PathStep, SolverPath, StopReason};
use crate::error::Result;
use crate::linalg::MinNormSolver;

/// Least squares against every training column, factorized once so many test
/// observations can be solved cheaply.
#[derive(Debug, Clone)]
pub struct FullRegression {
    solver: MinNormSolver,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FullFit {
    pub coefficients: DVector<f64>,
    pub residual_norm: f64,
    /// Whether the training matrix has full column rank.
    pub full_rank: bool,
}

impl FullFit {
    pub fn into_path(self) -> SolverPath {
        let n = self.coefficients.len();
        SolverPath {
            steps: vec![PathStep {
                selected: (0..n).collect(),
                coefficients: self.coefficients.as_slice().to_vec(),
                residual_norm: self.residual_norm,
                lasso: None,
            }],
            stop_reason: StopReason::IterationCap,
            breakpoints: Vec::new(),
        }
    }
}

impl FullRegression {
    pub fn new(x_mat: &DMatrix<f64>) -> Self {
        FullRegression {
            solver: MinNormSolver::new(x_mat),
        }
    }

    pub fn is_full_rank(&self) -> bool {
        self.solver.is_full_column_rank()
    }

    pub fn rank(&self) -> usize {
        self.solver.rank()
    }

    pub fn fit(&self, x_mat: &DMatrix<f64>, x: &DVector<f64>) -> Result<FullFit> {
        check_shapes(x_mat, x)?;
        let coefficients = self.solver.solve(x)?;
        let residual_norm = (x - x_mat * &coefficients).norm();
        Ok(FullFit {
            coefficients,
            residual_norm,
            full_rank: self.is_full_rank(),
        })
    }
}

/// Minimum-norm least squares of `x` on all columns of `x_mat`.
pub fn full_regression(x_mat: &DMatrix<f64>, x: &DVector<f64>) -> Result<FullFit> {
    check_shapes(x_mat, x)?;
    FullRegression::new(x_mat).fit(x_mat, x)
}
