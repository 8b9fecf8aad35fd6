//! Subset-regression solvers.
//!
//! Every solver returns a [`SolverPath`]: one [`PathStep`] per sparsity level
//! `s = 1, 2, ...`, each holding the selected column indices, the
//! least-squares coefficients on those columns and the residual norm. The
//! benchmark slices a single path per test observation instead of re-solving
//! for every `s`.

mod full;
mod homotopy;
mod marginal;
mod omp;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use full::{full_regression, FullFit, FullRegression};
pub use homotopy::{homotopy_path, lasso_kkt_violation};
pub use marginal::{marginal_path, top_correlations};
pub use omp::omp_path;

/// Stopping rules shared by the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopCriteria {
    /// Iteration cap `s`.
    pub max_sparsity: usize,
    /// Stop once the residual norm drops below this.
    pub residual_tol: f64,
    /// Stop once every `|x_i^T r|` is at most this.
    pub orthogonality_tol: f64,
}

impl StopCriteria {
    pub fn new(max_sparsity: usize, residual_tol: f64, orthogonality_tol: f64) -> Result<Self> {
        let stop = StopCriteria {
            max_sparsity,
            residual_tol,
            orthogonality_tol,
        };
        stop.validate()?;
        Ok(stop)
    }

    pub fn with_max_sparsity(max_sparsity: usize) -> Self {
        StopCriteria {
            max_sparsity,
            ..StopCriteria::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_sparsity == 0 {
            return Err(Error::InvalidArgument("max_sparsity must be at least 1".into()));
        }
        if !(self.residual_tol >= 0.0 && self.orthogonality_tol >= 0.0) {
            return Err(Error::InvalidArgument("tolerances must be non-negative".into()));
        }
        Ok(())
    }
}

impl Default for StopCriteria {
    fn default() -> Self {
        StopCriteria {
            max_sparsity: 100,
            residual_tol: 1e-8,
            orthogonality_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    IterationCap,
    ResidualSmall,
    NearOrthogonal,
    RankBoundary,
}

/// Lasso solution at a homotopy breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoPoint {
    pub lambda: f64,
    /// Active indices, in the order they entered.
    pub active: Vec<usize>,
    /// Penalized coefficients over `active`.
    pub coefficients: Vec<f64>,
    /// `||x - X beta||_2` for the penalized coefficients.
    pub residual_norm: f64,
}

impl LassoPoint {
    pub fn dense_coefficients(&self, n: usize) -> DVector<f64> {
        scatter(&self.active, &self.coefficients, n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub selected: Vec<usize>,
    /// Least-squares coefficients over `selected`, same order.
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    /// Breakpoint the step was taken from (homotopy only).
    pub lasso: Option<LassoPoint>,
}

impl PathStep {
    pub fn sparsity(&self) -> usize {
        self.selected.len()
    }

    /// Enlarges the coefficients to an `n`-vector with zeros off the support.
    pub fn dense_coefficients(&self, n: usize) -> DVector<f64> {
        scatter(&self.selected, &self.coefficients, n)
    }

    /// Nonzero support as `(index, coefficient)` pairs.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.selected
            .iter()
            .copied()
            .zip(self.coefficients.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverPath {
    pub steps: Vec<PathStep>,
    pub stop_reason: StopReason,
    /// Every homotopy breakpoint in order of decreasing lambda (empty for the
    /// other solvers).
    pub breakpoints: Vec<LassoPoint>,
}

impl SolverPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Step used at sparsity level `s` (1-based). Levels past the end of the
    /// path hold the last step.
    pub fn at_sparsity(&self, s: usize) -> Option<&PathStep> {
        if s == 0 {
            return None;
        }
        self.steps.get(s.min(self.steps.len()) - 1)
    }

    /// Whether level `s` is past the end of the path.
    pub fn is_held(&self, s: usize) -> bool {
        s > self.steps.len()
    }

    pub fn first_index(&self) -> Option<usize> {
        self.steps.first().and_then(|s| s.selected.first().copied())
    }

    /// Indices in the order the solver first selected them.
    pub fn selection_order(&self) -> Vec<usize> {
        let mut order = Vec::new();
        for step in &self.steps {
            for &i in &step.selected {
                if !order.contains(&i) {
                    order.push(i);
                }
            }
        }
        order
    }

    /// Lasso solution at an arbitrary penalty, interpolated linearly between
    /// the recorded breakpoints. `None` for non-homotopy paths or a penalty
    /// below the last breakpoint.
    pub fn lasso_at(&self, lambda: f64, n: usize) -> Option<DVector<f64>> {
        let first = self.breakpoints.first()?;
        if lambda >= first.lambda {
            return Some(DVector::zeros(n));
        }
        for pair in self.breakpoints.windows(2) {
            let (hi, lo) = (&pair[0], &pair[1]);
            if lambda <= hi.lambda && lambda >= lo.lambda {
                let span = hi.lambda - lo.lambda;
                let t = if span > 0.0 {
                    (hi.lambda - lambda) / span
                } else {
                    1.0
                };
                let a = hi.dense_coefficients(n);
                let b = lo.dense_coefficients(n);
                return Some(a * (1.0 - t) + b * t);
            }
        }
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Omp,
    Homotopy,
    Marginal,
    Full,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::Omp,
        SolverKind::Homotopy,
        SolverKind::Marginal,
        SolverKind::Full,
    ];

    pub const SUBSET: [SolverKind; 3] = [SolverKind::Omp, SolverKind::Homotopy, SolverKind::Marginal];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Omp => "omp",
            SolverKind::Homotopy => "homotopy",
            SolverKind::Marginal => "marginal",
            SolverKind::Full => "full",
        }
    }

    /// Runs the solver. Full regression yields a single-step path over all
    /// columns.
    pub fn solve(self, x_mat: &DMatrix<f64>, x: &DVector<f64>, stop: &StopCriteria) -> Result<SolverPath> {
        match self {
            SolverKind::Omp => omp_path(x_mat, x, stop),
            SolverKind::Homotopy => homotopy_path(x_mat, x, stop),
            SolverKind::Marginal => marginal_path(x_mat, x, stop),
            SolverKind::Full => Ok(full_regression(x_mat, x)?.into_path()),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "omp" => Ok(SolverKind::Omp),
            "homotopy" | "l1" | "lasso" => Ok(SolverKind::Homotopy),
            "marginal" | "mr" => Ok(SolverKind::Marginal),
            "full" => Ok(SolverKind::Full),
            other => Err(Error::InvalidArgument(format!("unknown solver `{other}`"))),
        }
    }
}

pub(crate) fn scatter(indices: &[usize], values: &[f64], n: usize) -> DVector<f64> {
    let mut out = DVector::zeros(n);
    for (&i, &v) in indices.iter().zip(values) {
        out[i] = v;
    }
    out
}

/// Index of the largest `|v_i|`, lowest index on ties, skipping `excluded`.
pub(crate) fn argmax_abs(v: &DVector<f64>, excluded: &[bool]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &c) in v.iter().enumerate() {
        if excluded.get(i).copied().unwrap_or(false) {
            continue;
        }
        let a = c.abs();
        if best.is_none_or(|(_, b)| a > b) {
            best = Some((i, a));
        }
    }
    best
}

pub(crate) fn check_shapes(x_mat: &DMatrix<f64>, x: &DVector<f64>) -> Result<()> {
    if x_mat.nrows() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "training matrix has {} rows, observation has length {}",
            x_mat.nrows(),
            x.len()
        )));
    }
    if x_mat.ncols() == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    Ok(())
}

/// `x - X_s beta` for coefficients over `selected`.
pub(crate) fn residual(
    x_mat: &DMatrix<f64>,
    x: &DVector<f64>,
    selected: &[usize],
    coefficients: &[f64],
) -> DVector<f64> {
    let mut r = x.clone();
    for (&i, &b) in selected.iter().zip(coefficients) {
        r.axpy(-b, &x_mat.column(i), 1.0);
    }
    r
}
