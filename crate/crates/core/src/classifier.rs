//! The classification step of SRC: class-masked reconstruction residuals and
//! the argmin label rule.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-class contributions `X beta_k` of a coefficient vector, for classes
/// `1..=K`. Classes without support get the zero vector.
#[derive(Debug, Clone)]
pub struct ClassContributions {
    per_class: Vec<DVector<f64>>,
    total: DVector<f64>,
}

impl ClassContributions {
    /// Builds the contributions from `(column index, coefficient)` pairs.
    pub fn from_support<I>(x_mat: &DMatrix<f64>, support: I, labels: &[usize], n_classes: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        if n_classes == 0 {
            return Err(Error::EmptyClassSet);
        }
        if labels.len() != x_mat.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} training columns",
                labels.len(),
                x_mat.ncols()
            )));
        }
        let m = x_mat.nrows();
        let mut per_class = vec![DVector::zeros(m); n_classes];
        let mut total = DVector::zeros(m);
        for (i, b) in support {
            if b == 0.0 {
                continue;
            }
            let label = *labels.get(i).ok_or_else(|| {
                Error::DimensionMismatch(format!("coefficient index {i} out of range"))
            })?;
            if label == 0 || label > n_classes {
                return Err(Error::InvalidArgument(format!(
                    "label {label} outside 1..={n_classes}"
                )));
            }
            per_class[label - 1].axpy(b, &x_mat.column(i), 1.0);
            total.axpy(b, &x_mat.column(i), 1.0);
        }
        Ok(ClassContributions { per_class, total })
    }

    /// Builds the contributions from an enlarged `n`-vector.
    pub fn from_dense(x_mat: &DMatrix<f64>, beta: &DVector<f64>, labels: &[usize], n_classes: usize) -> Result<Self> {
        if beta.len() != x_mat.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "coefficient vector of length {} for {} training columns",
                beta.len(),
                x_mat.ncols()
            )));
        }
        Self::from_support(x_mat, beta.iter().copied().enumerate(), labels, n_classes)
    }

    pub fn n_classes(&self) -> usize {
        self.per_class.len()
    }

    /// `X beta_k` for class `k` (1-based).
    pub fn own(&self, k: usize) -> &DVector<f64> {
        &self.per_class[k - 1]
    }

    /// `X beta_{-k}`: everything except class `k`.
    pub fn complement(&self, k: usize) -> DVector<f64> {
        // Summed rather than subtracted from the total, so that with two
        // classes the complement is bitwise the other class.
        let mut out = DVector::zeros(self.total.len());
        for (j, v) in self.per_class.iter().enumerate() {
            if j + 1 != k {
                out += v;
            }
        }
        out
    }

    /// `X beta`.
    pub fn total(&self) -> &DVector<f64> {
        &self.total
    }

    /// `||x - X beta_k||_2` for every class.
    pub fn residuals(&self, x: &DVector<f64>) -> Vec<f64> {
        self.per_class.iter().map(|v| (x - v).norm()).collect()
    }
}

/// Output of the SRC rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrcDecision {
    /// Assigned class in `1..=K`.
    pub label: usize,
    pub class_residuals: Vec<f64>,
    /// Number of nonzero coefficients the decision was based on.
    pub sparsity_used: usize,
}

/// 1-based index of the smallest residual; the lowest class wins ties.
pub fn argmin_label(residuals: &[f64]) -> usize {
    let mut best = 0;
    for (k, &r) in residuals.iter().enumerate() {
        if r < residuals[best] {
            best = k;
        }
    }
    best + 1
}

/// `||x - X beta_k||_2` for `k = 1..=K`.
pub fn class_residuals(
    x_mat: &DMatrix<f64>,
    beta: &DVector<f64>,
    labels: &[usize],
    n_classes: usize,
    x: &DVector<f64>,
) -> Result<Vec<f64>> {
    check_observation(x_mat, x)?;
    Ok(ClassContributions::from_dense(x_mat, beta, labels, n_classes)?.residuals(x))
}

/// Assigns `x` to the class with the smallest masked residual.
pub fn src_classify(
    x_mat: &DMatrix<f64>,
    beta: &DVector<f64>,
    labels: &[usize],
    n_classes: usize,
    x: &DVector<f64>,
) -> Result<SrcDecision> {
    let class_residuals = class_residuals(x_mat, beta, labels, n_classes, x)?;
    Ok(SrcDecision {
        label: argmin_label(&class_residuals),
        class_residuals,
        sparsity_used: beta.iter().filter(|b| **b != 0.0).count(),
    })
}

/// Decision from precomputed contributions.
pub fn decide(contributions: &ClassContributions, x: &DVector<f64>, sparsity_used: usize) -> SrcDecision {
    let class_residuals = contributions.residuals(x);
    SrcDecision {
        label: argmin_label(&class_residuals),
        class_residuals,
        sparsity_used,
    }
}

pub(crate) fn check_observation(x_mat: &DMatrix<f64>, x: &DVector<f64>) -> Result<()> {
    if x.len() != x_mat.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "observation of length {} against {} rows",
            x.len(),
            x_mat.nrows()
        )));
    }
    Ok(())
}
