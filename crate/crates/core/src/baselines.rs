//! Comparison classifiers: project to `d` dimensions by PCA (feature data) or
//! spectral embedding (square similarity/dissimilarity data), then classify
//! with k-nearest-neighbors or linear discriminant analysis.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_KNN_K: usize = 9;
pub const DEFAULT_LDA_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionKind {
    Pca,
    SpectralEmbedding,
}

/// A fitted linear projection.
///
/// For PCA `basis` is `m x d` with orthonormal columns and `center` is the
/// training mean. For spectral embedding `basis` holds one row of coordinates
/// per observation of the square input (`n x d`) and there is no center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub kind: ProjectionKind,
    pub dimension: usize,
    pub basis: DMatrix<f64>,
    pub center: Option<DVector<f64>>,
    /// Leading singular values, descending.
    pub singular_values: Vec<f64>,
}

/// Thin SVD factors with singular values sorted descending.
fn sorted_svd(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let svd = a.clone().svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::NumericalBreakdown("SVD did not converge".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap_or(Ordering::Equal)
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| svd.singular_values[i]).collect();
    Ok((u.select_columns(&order), values))
}

/// Flips each column so that its largest-magnitude entry (first on ties) is
/// positive.
fn fix_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

impl Projection {
    /// PCA of the columns of `data` (`m x n`): the top-`d` principal axes of
    /// the centered data.
    pub fn fit_pca(data: &DMatrix<f64>, d: usize) -> Result<Self> {
        let (m, n) = data.shape();
        if n == 0 || m == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        if d == 0 {
            return Err(Error::InvalidArgument("projection dimension must be at least 1".into()));
        }
        let max = m.min(n);
        if d > max {
            return Err(Error::DimensionTooLarge { requested: d, max });
        }
        let center = data.column_mean();
        let mut centered = data.clone();
        for mut col in centered.column_iter_mut() {
            col -= &center;
        }
        let (u, values) = sorted_svd(&centered)?;
        let mut basis = u.columns(0, d).into_owned();
        fix_signs(&mut basis);
        Ok(Projection {
            kind: ProjectionKind::Pca,
            dimension: d,
            basis,
            center: Some(center),
            singular_values: values[..d].to_vec(),
        })
    }

    /// Spectral embedding of a square matrix: left singular vectors scaled by
    /// the square roots of the singular values, one row per observation.
    pub fn fit_spectral(square: &DMatrix<f64>, d: usize) -> Result<Self> {
        let (rows, cols) = square.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        if d == 0 {
            return Err(Error::InvalidArgument("projection dimension must be at least 1".into()));
        }
        if d > rows {
            return Err(Error::DimensionTooLarge { requested: d, max: rows });
        }
        let (u, values) = sorted_svd(square)?;
        let mut basis = u.columns(0, d).into_owned();
        fix_signs(&mut basis);
        for (j, mut col) in basis.column_iter_mut().enumerate() {
            col *= values[j].sqrt();
        }
        Ok(Projection {
            kind: ProjectionKind::SpectralEmbedding,
            dimension: d,
            basis,
            center: None,
            singular_values: values[..d].to_vec(),
        })
    }

    /// `fit_pca` or `fit_spectral` depending on `kind`.
    pub fn fit(data: &DMatrix<f64>, kind: ProjectionKind, d: usize) -> Result<Self> {
        match kind {
            ProjectionKind::Pca => Self::fit_pca(data, d),
            ProjectionKind::SpectralEmbedding => Self::fit_spectral(data, d),
        }
    }

    /// The projection restricted to its leading `d` components.
    pub fn truncate(&self, d: usize) -> Result<Self> {
        if d == 0 || d > self.dimension {
            return Err(Error::DimensionTooLarge {
                requested: d,
                max: self.dimension,
            });
        }
        Ok(Projection {
            kind: self.kind,
            dimension: d,
            basis: self.basis.columns(0, d).into_owned(),
            center: self.center.clone(),
            singular_values: self.singular_values[..d].to_vec(),
        })
    }

    /// PCA coordinates (`d x n`) of the columns of `data`.
    pub fn project(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let Some(center) = &self.center else {
            return Err(Error::InvalidArgument(
                "spectral embeddings only have coordinates for the fitted observations".into(),
            ));
        };
        if data.nrows() != center.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows against a projection fitted on {}",
                data.nrows(),
                center.len()
            )));
        }
        let mut centered = data.clone();
        for mut col in centered.column_iter_mut() {
            col -= center;
        }
        Ok(self.basis.tr_mul(&centered))
    }

    /// Spectral coordinates (`d x |indices|`) of fitted observations.
    pub fn coordinates(&self, indices: &[usize]) -> Result<DMatrix<f64>> {
        if self.kind != ProjectionKind::SpectralEmbedding {
            return Err(Error::InvalidArgument("coordinates are only stored for spectral embeddings".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.basis.nrows()) {
            return Err(Error::DimensionMismatch(format!("observation {bad} was not embedded")));
        }
        Ok(self.basis.select_rows(indices).transpose())
    }

    /// Reconstruction `center + B B^T (x - center)` of PCA inputs.
    pub fn reconstruct(&self, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let coords = self.project(data)?;
        let mut out = &self.basis * coords;
        let center = self.center.as_ref().expect("project checked PCA");
        for mut col in out.column_iter_mut() {
            col += center;
        }
        Ok(out)
    }
}

fn check_training(train: &DMatrix<f64>, labels: &[usize], x: &DVector<f64>) -> Result<()> {
    if train.ncols() == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if labels.len() != train.ncols() {
        return Err(Error::LabelCountMismatch {
            labels: labels.len(),
            observations: train.ncols(),
        });
    }
    if x.len() != train.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "query of dimension {} against training dimension {}",
            x.len(),
            train.nrows()
        )));
    }
    if labels.contains(&0) {
        return Err(Error::InvalidArgument("labels are 1-based".into()));
    }
    Ok(())
}

/// Majority vote over the `k` nearest training columns to `x`.
pub fn knn_classify(train: &DMatrix<f64>, labels: &[usize], x: &DVector<f64>, k: usize) -> Result<usize> {
    check_training(train, labels, x)?;
    let dist: Vec<f64> = train.column_iter().map(|c| (c - x).norm_squared()).collect();
    knn_vote(&dist, labels, k)
}

/// Vote among the `k` smallest entries of `dist` (squared or plain
/// distances). Distance ties go to the lower training index, vote ties to
/// the lower class.
pub fn knn_vote(dist: &[f64], labels: &[usize], k: usize) -> Result<usize> {
    let n = dist.len();
    if n == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} outside 1..={n}")));
    }
    let order = |&a: &usize, &b: &usize| dist[a].partial_cmp(&dist[b]).unwrap_or(Ordering::Equal).then(a.cmp(&b));
    let mut idx: Vec<usize> = (0..n).collect();
    if k < n {
        idx.select_nth_unstable_by(k - 1, order);
    }
    let n_classes = labels.iter().copied().max().unwrap_or(0);
    let mut votes = vec![0usize; n_classes + 1];
    for &i in &idx[..k] {
        votes[labels[i]] += 1;
    }
    let mut best = 1;
    for c in 2..=n_classes {
        if votes[c] > votes[best] {
            best = c;
        }
    }
    Ok(best)
}

/// Linear discriminant analysis with a pooled, ridge-regularized covariance.
#[derive(Debug, Clone)]
pub struct LdaModel {
    /// `Sigma^-1 mu_k` per class (zero for absent classes).
    weights: Vec<DVector<f64>>,
    /// `-mu_k^T Sigma^-1 mu_k / 2 + ln pi_k` (`-inf` for absent classes).
    offsets: Vec<f64>,
}

/// Class means and pooled within-class scatter (not yet divided by the
/// degrees of freedom).
pub struct ClassMoments {
    pub means: Vec<DVector<f64>>,
    pub counts: Vec<usize>,
    pub scatter: DMatrix<f64>,
}

impl ClassMoments {
    pub fn new(train: &DMatrix<f64>, labels: &[usize], n_classes: usize) -> Result<Self> {
        if train.ncols() == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        if labels.len() != train.ncols() {
            return Err(Error::LabelCountMismatch {
                labels: labels.len(),
                observations: train.ncols(),
            });
        }
        let d = train.nrows();
        let mut means = vec![DVector::zeros(d); n_classes];
        let mut counts = vec![0usize; n_classes];
        for (col, &y) in train.column_iter().zip(labels) {
            if y == 0 || y > n_classes {
                return Err(Error::InvalidArgument(format!("label {y} outside 1..={n_classes}")));
            }
            means[y - 1] += col;
            counts[y - 1] += 1;
        }
        for (mean, &c) in means.iter_mut().zip(&counts) {
            if c > 0 {
                *mean /= c as f64;
            }
        }
        let mut centered = train.clone();
        for (mut col, &y) in centered.column_iter_mut().zip(labels) {
            col -= &means[y - 1];
        }
        let scatter = &centered * centered.transpose();
        Ok(ClassMoments { means, counts, scatter })
    }

    /// Pooled within-class covariance.
    pub fn covariance(&self) -> DMatrix<f64> {
        let n: usize = self.counts.iter().sum();
        let present = self.counts.iter().filter(|&&c| c > 0).count();
        let dof = n.saturating_sub(present).max(1);
        &self.scatter / dof as f64
    }
}

impl LdaModel {
    pub fn fit(train: &DMatrix<f64>, labels: &[usize], n_classes: usize, ridge: f64) -> Result<Self> {
        let moments = ClassMoments::new(train, labels, n_classes)?;
        Self::from_parts(&moments.covariance(), &moments.means, &moments.counts, ridge)
    }

    /// Builds the discriminants from precomputed moments. Classes with no
    /// training points are never predicted.
    pub fn from_parts(cov: &DMatrix<f64>, means: &[DVector<f64>], counts: &[usize], ridge: f64) -> Result<Self> {
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(Error::InvalidArgument(format!("ridge {ridge} must be finite and non-negative")));
        }
        let d = cov.nrows();
        let n: usize = counts.iter().sum();
        if n == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        let mut reg = cov.clone();
        if ridge > 0.0 {
            let trace = cov.trace();
            let shift = if trace > 0.0 { ridge * trace / d as f64 } else { ridge };
            for i in 0..d {
                reg[(i, i)] += shift;
            }
        }
        let chol = reg.cholesky().ok_or(Error::SingularCovariance)?;
        let mut weights = Vec::with_capacity(means.len());
        let mut offsets = Vec::with_capacity(means.len());
        for (mean, &count) in means.iter().zip(counts) {
            if count == 0 {
                weights.push(DVector::zeros(d));
                offsets.push(f64::NEG_INFINITY);
                continue;
            }
            let w = chol.solve(mean);
            offsets.push(-0.5 * mean.dot(&w) + (count as f64 / n as f64).ln());
            weights.push(w);
        }
        if weights.iter().any(|w| w.iter().any(|v| !v.is_finite())) {
            return Err(Error::SingularCovariance);
        }
        Ok(LdaModel { weights, offsets })
    }

    /// Discriminant value per class.
    pub fn discriminants(&self, x: &DVector<f64>) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.offsets)
            .map(|(w, &o)| if o == f64::NEG_INFINITY { o } else { x.dot(w) + o })
            .collect()
    }

    /// Class with the largest discriminant, lowest index on ties.
    pub fn classify(&self, x: &DVector<f64>) -> usize {
        let disc = self.discriminants(x);
        let mut best = 0;
        for (k, &v) in disc.iter().enumerate() {
            if v > disc[best] {
                best = k;
            }
        }
        best + 1
    }
}

/// One-shot LDA: fit on `train` and classify `x`.
pub fn lda_classify(train: &DMatrix<f64>, labels: &[usize], x: &DVector<f64>, ridge: f64) -> Result<usize> {
    check_training(train, labels, x)?;
    let n_classes = labels.iter().copied().max().unwrap_or(0);
    Ok(LdaModel::fit(train, labels, n_classes, ridge)?.classify(x))
}
