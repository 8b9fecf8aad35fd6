//! Benchmark configuration and its flat `key = value` file format.
//!
//! ```text
//! # comments start with '#'
//! solvers = omp, homotopy, marginal, full
//! sparsity_max = 100
//! baseline_dims = 100
//! knn_k = 9
//! monte_carlo = 100
//! split_fraction = 0.5
//! master_seed = 0
//! dataset = cone:K=5,m=50,within=5,between=90,n=50,seed=1
//! similarity_input = false
//! ```
//!
//! `dataset` is either a file path or a generator descriptor:
//! `cone:K=..,m=..,within=..,between=..,n=..,seed=..[,nonnegative=true]`
//! (angles in degrees) or `subspace:K=..,m=..,dim=..,n=..,sigma=..,seed=..`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{DEFAULT_KNN_K, DEFAULT_LDA_RIDGE};
use crate::error::{Error, Result};
use crate::harness::io::{load_dataset, DataFormat, LoadedData};
use crate::solvers::SolverKind;
use crate::synth::{ConeModel, SubspaceModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    File { path: PathBuf },
    Cone { model: ConeModel, seed: u64 },
    Subspace { model: SubspaceModel, seed: u64 },
}

impl DatasetSource {
    /// Loads or generates the data. `similarity` selects the file format.
    pub fn load(&self, similarity: bool) -> Result<LoadedData> {
        match self {
            DatasetSource::File { path } => {
                let format = if similarity {
                    DataFormat::SimilarityCsv
                } else {
                    DataFormat::FeatureCsv
                };
                load_dataset(path, format)
            }
            DatasetSource::Cone { model, seed } => Ok(LoadedData {
                dataset: model.generate(*seed)?,
                similarity: false,
            }),
            DatasetSource::Subspace { model, seed } => Ok(LoadedData {
                dataset: model.generate(*seed)?,
                similarity: false,
            }),
        }
    }
}

fn generator_params(body: &str) -> Result<Vec<(String, String)>> {
    body.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("generator parameter `{p}` is not key=value")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::InvalidConfig(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

impl FromStr for DatasetSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(body) = s.strip_prefix("cone:") {
            let mut model = ConeModel {
                classes: 2,
                dim: 20,
                within_angle: 5f64.to_radians(),
                between_angle: 90f64.to_radians(),
                per_class: 50,
                nonnegative: false,
            };
            let mut seed = 0;
            for (k, v) in generator_params(body)? {
                match k.as_str() {
                    "K" | "classes" => model.classes = parse_value(&k, &v)?,
                    "m" | "dim" => model.dim = parse_value(&k, &v)?,
                    "within" => model.within_angle = parse_value::<f64>(&k, &v)?.to_radians(),
                    "between" => model.between_angle = parse_value::<f64>(&k, &v)?.to_radians(),
                    "n" | "per_class" => model.per_class = parse_value(&k, &v)?,
                    "seed" => seed = parse_value(&k, &v)?,
                    "nonnegative" => model.nonnegative = parse_bool(&k, &v)?,
                    _ => return Err(Error::InvalidConfig(format!("unknown cone parameter `{k}`"))),
                }
            }
            Ok(DatasetSource::Cone { model, seed })
        } else if let Some(body) = s.strip_prefix("subspace:") {
            let mut model = SubspaceModel {
                classes: 5,
                dim: 60,
                subspace_dim: 4,
                per_class: 50,
                noise_sigma: 0.01,
            };
            let mut seed = 0;
            for (k, v) in generator_params(body)? {
                match k.as_str() {
                    "K" | "classes" => model.classes = parse_value(&k, &v)?,
                    "m" => model.dim = parse_value(&k, &v)?,
                    "dim" | "subspace_dim" => model.subspace_dim = parse_value(&k, &v)?,
                    "n" | "per_class" => model.per_class = parse_value(&k, &v)?,
                    "sigma" | "noise_sigma" => model.noise_sigma = parse_value(&k, &v)?,
                    "seed" => seed = parse_value(&k, &v)?,
                    _ => return Err(Error::InvalidConfig(format!("unknown subspace parameter `{k}`"))),
                }
            }
            Ok(DatasetSource::Subspace { model, seed })
        } else if s.is_empty() {
            Err(Error::InvalidConfig("empty dataset descriptor".into()))
        } else {
            Ok(DatasetSource::File { path: PathBuf::from(s) })
        }
    }
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSource::File { path } => write!(f, "{}", path.display()),
            DatasetSource::Cone { model, seed } => write!(
                f,
                "cone:K={},m={},within={},between={},n={},seed={},nonnegative={}",
                model.classes,
                model.dim,
                model.within_angle.to_degrees(),
                model.between_angle.to_degrees(),
                model.per_class,
                seed,
                model.nonnegative
            ),
            DatasetSource::Subspace { model, seed } => write!(
                f,
                "subspace:K={},m={},dim={},n={},sigma={},seed={}",
                model.classes, model.dim, model.subspace_dim, model.per_class, model.noise_sigma, seed
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub solvers: Vec<SolverKind>,
    pub sparsity_max: usize,
    pub baseline_dims: usize,
    pub knn_k: usize,
    pub monte_carlo: usize,
    pub split_fraction: f64,
    pub master_seed: u64,
    pub dataset: DatasetSource,
    pub similarity_input: bool,
    /// LDA regularization, relative to the covariance trace.
    pub lda_ridge: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            solvers: SolverKind::ALL.to_vec(),
            sparsity_max: 100,
            baseline_dims: 100,
            knn_k: DEFAULT_KNN_K,
            monte_carlo: 100,
            split_fraction: 0.5,
            master_seed: 0,
            dataset: DatasetSource::Cone {
                model: ConeModel {
                    classes: 2,
                    dim: 20,
                    within_angle: 5f64.to_radians(),
                    between_angle: 90f64.to_radians(),
                    per_class: 50,
                    nonnegative: false,
                },
                seed: 0,
            },
            similarity_input: false,
            lda_ridge: DEFAULT_LDA_RIDGE,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(Error::InvalidConfig("no solvers selected".into()));
        }
        for (key, v) in [
            ("sparsity_max", self.sparsity_max),
            ("baseline_dims", self.baseline_dims),
            ("knn_k", self.knn_k),
            ("monte_carlo", self.monte_carlo),
        ] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{key} must be at least 1")));
            }
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "split_fraction {} outside (0, 1)",
                self.split_fraction
            )));
        }
        if !(self.lda_ridge >= 0.0 && self.lda_ridge.is_finite()) {
            return Err(Error::InvalidConfig(format!("lda_ridge {} must be non-negative", self.lda_ridge)));
        }
        Ok(())
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key {
            "solvers" => {
                self.solvers = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.parse::<SolverKind>().map_err(|e| Error::InvalidConfig(e.to_string())))
                    .collect::<Result<_>>()?;
                self.solvers.dedup();
            }
            "sparsity_max" => self.sparsity_max = parse_value(key, value)?,
            "baseline_dims" => self.baseline_dims = parse_value(key, value)?,
            "knn_k" => self.knn_k = parse_value(key, value)?,
            "monte_carlo" | "replicates" => self.monte_carlo = parse_value(key, value)?,
            "split_fraction" => self.split_fraction = parse_value(key, value)?,
            "master_seed" | "seed" => self.master_seed = parse_value(key, value)?,
            "dataset" => self.dataset = value.parse().map_err(|e: Error| Error::InvalidConfig(e.to_string()))?,
            "similarity_input" | "similarity" => self.similarity_input = parse_bool(key, value)?,
            "lda_ridge" => self.lda_ridge = parse_value(key, value)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses a config file on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = BenchConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", i + 1)))?;
            config
                .set(key, value)
                .map_err(|e| Error::InvalidConfig(format!("line {}: {e}", i + 1)))?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Renders the config in the file format accepted by [`BenchConfig::parse`].
    pub fn to_text(&self) -> String {
        let solvers: Vec<&str> = self.solvers.iter().map(|s| s.name()).collect();
        format!(
            "solvers = {}\nsparsity_max = {}\nbaseline_dims = {}\nknn_k = {}\nmonte_carlo = {}\nsplit_fraction = {}\nmaster_seed = {}\ndataset = {}\nsimilarity_input = {}\nlda_ridge = {}\n",
            solvers.join(", "),
            self.sparsity_max,
            self.baseline_dims,
            self.knn_k,
            self.monte_carlo,
            self.split_fraction,
            self.master_seed,
            self.dataset,
            self.similarity_input,
            self.lda_ridge
        )
    }
}
