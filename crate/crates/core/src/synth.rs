//! Labeled datasets and synthetic generators.
//!
//! Two generators realize the geometric assumptions SRC is analysed under:
//!
//! * [`SubspaceModel`]: each class lives in its own low-dimensional subspace
//!   (mutually orthogonal when they fit), plus isotropic noise.
//! * [`ConeModel`]: each class is a spherical cap of fixed angular radius
//!   around a class center, centers mutually orthogonal. Nothing here is
//!   low-rank; separation comes purely from angles.
//!
//! Both are deterministic in their seed; every class draws from its own
//! derived stream.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{normalize_columns, DenseMatrix};
use crate::seeds::{derive_seed, rng};

/// Observations as matrix columns with class labels in `1..=n_classes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub normalized: bool,
    pub name: String,
    /// Free-form provenance (generator parameters, source file, ...).
    pub metadata: BTreeMap<String, String>,
}

impl LabeledDataset {
    /// Wraps features and labels. Labels must lie in `1..=n_classes`; classes
    /// may be absent (a test split need not cover every class).
    pub fn new(features: DenseMatrix, labels: Vec<usize>, n_classes: usize, name: impl Into<String>) -> Result<Self> {
        if labels.len() != features.ncols() {
            return Err(Error::LabelCountMismatch {
                labels: labels.len(),
                observations: features.ncols(),
            });
        }
        if n_classes == 0 {
            return Err(Error::EmptyClassSet);
        }
        if let Some(&bad) = labels.iter().find(|&&y| y == 0 || y > n_classes) {
            return Err(Error::InvalidArgument(format!("label {bad} outside 1..={n_classes}")));
        }
        let normalized = features
            .column_iter()
            .all(|c| (c.norm() - 1.0).abs() <= 1e-10);
        Ok(LabeledDataset {
            features,
            labels,
            n_classes,
            normalized,
            name: name.into(),
            metadata: BTreeMap::new(),
        })
    }

    /// Like [`LabeledDataset::new`] with `K = max label`, additionally
    /// requiring every class in `1..=K` to be present.
    pub fn from_labels(features: DenseMatrix, labels: Vec<usize>, name: impl Into<String>) -> Result<Self> {
        let k = labels.iter().copied().max().unwrap_or(0);
        let ds = Self::new(features, labels, k, name)?;
        ds.require_all_classes()?;
        Ok(ds)
    }

    pub fn require_all_classes(&self) -> Result<()> {
        match self.class_counts().iter().position(|&c| c == 0) {
            Some(k) => Err(Error::InsufficientData(format!("class {} has no observations", k + 1))),
            None => Ok(()),
        }
    }

    pub fn with_metadata(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn dim(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_obs(&self) -> usize {
        self.features.ncols()
    }

    /// Observations per class, index `k - 1` for class `k`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &y in &self.labels {
            counts[y - 1] += 1;
        }
        counts
    }

    /// Copy with every column scaled to unit norm.
    pub fn normalized(&self) -> Result<Self> {
        let features = DenseMatrix::new(normalize_columns(self.features.as_matrix())?)?;
        Ok(LabeledDataset {
            features,
            normalized: true,
            ..self.clone()
        })
    }

    /// Observations at `indices`, in that order.
    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyInput);
        }
        let features = self.features.select_columns(indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        let mut ds = LabeledDataset::new(features, labels, self.n_classes, name)?;
        ds.metadata = self.metadata.clone();
        Ok(ds)
    }
}

fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Orthonormal `rows x cols` frame from the QR factor of a Gaussian matrix.
fn random_frame<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    let q = gaussian_matrix(rng, rows, cols).qr().q();
    q.columns(0, cols).into_owned()
}

/// Union-of-subspaces generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceModel {
    pub classes: usize,
    pub dim: usize,
    pub subspace_dim: usize,
    pub per_class: usize,
    pub noise_sigma: f64,
}

impl SubspaceModel {
    /// Mutually orthogonal class subspaces when `classes * subspace_dim <=
    /// dim`, independently drawn ones otherwise.
    pub fn orthogonal(&self) -> bool {
        self.classes * self.subspace_dim <= self.dim
    }

    /// Class bases (`dim x subspace_dim` each).
    pub fn bases(&self, seed: u64) -> Result<Vec<DMatrix<f64>>> {
        self.validate()?;
        if self.orthogonal() {
            let mut rng = rng(derive_seed(seed, 0));
            let frame = random_frame(&mut rng, self.dim, self.classes * self.subspace_dim);
            Ok((0..self.classes)
                .map(|k| frame.columns(k * self.subspace_dim, self.subspace_dim).into_owned())
                .collect())
        } else {
            Ok((0..self.classes)
                .map(|k| {
                    let mut rng = rng(derive_seed(seed, 1000 + k as u64));
                    random_frame(&mut rng, self.dim, self.subspace_dim)
                })
                .collect())
        }
    }

    fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.dim == 0 || self.subspace_dim == 0 || self.per_class == 0 {
            return Err(Error::InvalidArgument("subspace model parameters must be positive".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidArgument("noise_sigma must be finite and non-negative".into()));
        }
        if self.subspace_dim > self.dim {
            return Err(Error::DimensionTooSmall(format!(
                "subspace dimension {} exceeds ambient dimension {}",
                self.subspace_dim, self.dim
            )));
        }
        Ok(())
    }

    pub fn generate(&self, seed: u64) -> Result<LabeledDataset> {
        let bases = self.bases(seed)?;
        let n = self.classes * self.per_class;
        let mut data = DMatrix::zeros(self.dim, n);
        let mut labels = Vec::with_capacity(n);
        for (k, basis) in bases.iter().enumerate() {
            let mut rng = rng(derive_seed(seed, 1 + k as u64));
            let coeffs = gaussian_matrix(&mut rng, self.subspace_dim, self.per_class);
            let mut block = basis * coeffs;
            if self.noise_sigma > 0.0 {
                block += gaussian_matrix(&mut rng, self.dim, self.per_class) * self.noise_sigma;
            }
            data.columns_mut(k * self.per_class, self.per_class).copy_from(&block);
            labels.extend(std::iter::repeat_n(k + 1, self.per_class));
        }
        let features = DenseMatrix::new(normalize_columns(&data)?)?;
        Ok(LabeledDataset::new(features, labels, self.classes, "subspace")?
            .with_metadata("generator", "subspace")
            .with_metadata("classes", self.classes)
            .with_metadata("dim", self.dim)
            .with_metadata("subspace_dim", self.subspace_dim)
            .with_metadata("per_class", self.per_class)
            .with_metadata("noise_sigma", self.noise_sigma)
            .with_metadata("orthogonal", self.orthogonal())
            .with_metadata("coefficients", "standard gaussian")
            .with_metadata("seed", seed))
    }
}

/// `subspace_model(K, m, subspace_dim, n_per_class, noise_sigma, seed)`.
pub fn subspace_model(
    classes: usize,
    dim: usize,
    subspace_dim: usize,
    per_class: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    SubspaceModel {
        classes,
        dim,
        subspace_dim,
        per_class,
        noise_sigma,
    }
    .generate(seed)
}

/// Spherical-cap generator. Angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeModel {
    pub classes: usize,
    pub dim: usize,
    pub within_angle: f64,
    pub between_angle: f64,
    pub per_class: usize,
    /// Fold every coordinate to its absolute value. Centers are then standard
    /// basis vectors so the cap radius is unchanged by the folding.
    pub nonnegative: bool,
}

impl ConeModel {
    fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.dim == 0 || self.per_class == 0 {
            return Err(Error::InvalidArgument("cone model parameters must be positive".into()));
        }
        let (w, b) = (self.within_angle, self.between_angle);
        if !(w >= 0.0 && w < b && b <= std::f64::consts::FRAC_PI_2) {
            return Err(Error::InfeasibleGeometry(format!(
                "need 0 <= within ({w}) < between ({b}) <= pi/2"
            )));
        }
        if w > 0.0 && b - 2.0 * w <= 2.0 * w {
            return Err(Error::InfeasibleGeometry(format!(
                "between-class margin {} does not exceed within-class spread {}",
                b - 2.0 * w,
                2.0 * w
            )));
        }
        if self.classes > self.dim {
            return Err(Error::InfeasibleGeometry(format!(
                "{} orthogonal centers do not fit in dimension {}",
                self.classes, self.dim
            )));
        }
        Ok(())
    }

    /// Unit class centers, mutually orthogonal.
    pub fn centers(&self, seed: u64) -> Result<DMatrix<f64>> {
        self.validate()?;
        if self.nonnegative {
            return Ok(DMatrix::identity(self.dim, self.classes));
        }
        let mut rng = rng(derive_seed(seed, 0));
        Ok(random_frame(&mut rng, self.dim, self.classes))
    }

    pub fn generate(&self, seed: u64) -> Result<LabeledDataset> {
        let centers = self.centers(seed)?;
        let n = self.classes * self.per_class;
        let mut data = DMatrix::zeros(self.dim, n);
        let mut labels = Vec::with_capacity(n);
        for k in 0..self.classes {
            let center = centers.column(k).clone_owned();
            let mut rng = rng(derive_seed(seed, 1 + k as u64));
            for j in 0..self.per_class {
                let mut v = sample_cap(&mut rng, &center, self.within_angle);
                if self.nonnegative {
                    v.apply(|e| *e = e.abs());
                }
                let angle = 2.0 * ((&v - &center).norm() / 2.0).min(1.0).asin();
                if angle > self.within_angle + 1e-9 {
                    return Err(Error::NumericalBreakdown(format!(
                        "cap sample at angle {angle} exceeds radius {}",
                        self.within_angle
                    )));
                }
                data.set_column(k * self.per_class + j, &v);
                labels.push(k + 1);
            }
        }
        let features = DenseMatrix::new(data)?;
        Ok(LabeledDataset::new(features, labels, self.classes, "cone")?
            .with_metadata("generator", "cone")
            .with_metadata("classes", self.classes)
            .with_metadata("dim", self.dim)
            .with_metadata("within_angle", self.within_angle)
            .with_metadata("between_angle", self.between_angle)
            .with_metadata("per_class", self.per_class)
            .with_metadata("nonnegative", self.nonnegative)
            .with_metadata("centers", if self.nonnegative { "standard basis" } else { "random orthonormal" })
            .with_metadata("cap", "uniform on spherical cap")
            .with_metadata("seed", seed))
    }
}

/// `cone_model(K, m, within_angle, between_angle, n_per_class, seed)`, angles
/// in radians.
pub fn cone_model(
    classes: usize,
    dim: usize,
    within_angle: f64,
    between_angle: f64,
    per_class: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    ConeModel {
        classes,
        dim,
        within_angle,
        between_angle,
        per_class,
        nonnegative: false,
    }
    .generate(seed)
}

/// Uniform draw from the spherical cap of angular radius `radius` around the
/// unit vector `center`.
///
/// The polar angle has density proportional to `sin(t)^(m-2)` on
/// `[0, radius]`. It is drawn by rejection from the density proportional to
/// `t^(m-2)` (inverse CDF `radius * U^(1/(m-1))`), accepting with probability
/// `(sin t / t)^(m-2)`. The direction is a normalized Gaussian in the tangent
/// space.
fn sample_cap<R: Rng>(rng: &mut R, center: &DVector<f64>, radius: f64) -> DVector<f64> {
    let m = center.len();
    if radius == 0.0 || m == 1 {
        return center.clone();
    }
    let exponent = (m - 2) as f64;
    let theta = loop {
        let u: f64 = rng.random();
        let t = radius * u.powf(1.0 / (m - 1) as f64);
        if t == 0.0 {
            break 0.0;
        }
        let accept = (t.sin() / t).powf(exponent);
        if rng.random::<f64>() < accept {
            break t;
        }
    };
    let tangent = loop {
        let g = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let t = &g - center * center.dot(&g);
        let norm = t.norm();
        if norm > 1e-12 {
            break t / norm;
        }
    };
    let v = center * theta.cos() + tangent * theta.sin();
    let norm = v.norm();
    v / norm
}
