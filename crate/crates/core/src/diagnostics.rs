//! Class-dominance diagnostics.
//!
//! * [`dominance_report`]: does the true class dominate the representation,
//!   positively dominate it, and what are the angles between `x` and the two
//!   masked contributions.
//! * [`dominance_certifies_label`]: dominance plus positive dominance must give the
//!   correct label.
//! * [`angle_condition_scan`]: Monte Carlo check of the principal-angle
//!   condition (within-class angles small, between-class span angles large).
//! * [`decompose_errors`]: `L = P_D * P1 + (1 - P_D) * P2` from outcome counts.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{check_observation, ClassContributions, SrcDecision};
use crate::error::{Error, Result};
use crate::linalg::{angle_to_vector, principal_angle};
use crate::seeds::{derive_seed, rng};
use crate::synth::LabeledDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    /// Class the report was computed for.
    pub class: usize,
    /// `||X beta_{-y}|| < ||X beta_y||`.
    pub dominates: bool,
    /// `||X beta_y|| <= ||X beta_{-k}||` for every `k != y`.
    pub positively_dominates: bool,
    /// `||X beta_y||`.
    pub own_norm: f64,
    /// `||X beta_{-k}||` for `k = 1..=K`.
    pub complement_norms: Vec<f64>,
    /// Angle between `x` and `X beta_y` (`pi/2` if that is zero).
    pub angle_own: f64,
    /// Angle between `x` and `X beta_{-y}` (`pi/2` if that is zero).
    pub angle_other: f64,
    /// `||X beta_y|| / ||X beta_{-y}||`, infinite when the complement is zero.
    pub dominance_ratio: f64,
}

impl DominanceReport {
    pub fn from_contributions(contributions: &ClassContributions, y: usize, x: &DVector<f64>) -> Result<Self> {
        let k_total = contributions.n_classes();
        if y == 0 || y > k_total {
            return Err(Error::InvalidArgument(format!("class {y} outside 1..={k_total}")));
        }
        let own = contributions.own(y);
        let own_norm = own.norm();
        let complement_y = contributions.complement(y);
        let complement_norms: Vec<f64> = (1..=k_total)
            .map(|k| {
                if k == y {
                    complement_y.norm()
                } else {
                    contributions.complement(k).norm()
                }
            })
            .collect();
        let other_norm = complement_norms[y - 1];
        let dominates = other_norm < own_norm;
        let positively_dominates = complement_norms
            .iter()
            .enumerate()
            .all(|(k, &c)| k + 1 == y || own_norm <= c);
        Ok(DominanceReport {
            class: y,
            dominates,
            positively_dominates,
            own_norm,
            complement_norms,
            angle_own: angle_to_vector(x.column(0), own.column(0)),
            angle_other: angle_to_vector(x.column(0), complement_y.column(0)),
            dominance_ratio: own_norm / other_norm,
        })
    }

    pub fn other_norm(&self) -> f64 {
        self.complement_norms[self.class - 1]
    }
}

/// Dominance diagnostics of `beta` for true class `y`.
pub fn dominance_report(
    x_mat: &DMatrix<f64>,
    beta: &DVector<f64>,
    labels: &[usize],
    n_classes: usize,
    y: usize,
    x: &DVector<f64>,
) -> Result<DominanceReport> {
    check_observation(x_mat, x)?;
    let contributions = ClassContributions::from_dense(x_mat, beta, labels, n_classes)?;
    DominanceReport::from_contributions(&contributions, y, x)
}

/// `true` unless the instance has dominance and positive dominance but was
/// misclassified.
pub fn dominance_certifies_label(report: &DominanceReport, decision: &SrcDecision, y: usize) -> bool {
    !(report.dominates && report.positively_dominates) || decision.label == y
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionCounts {
    pub n_test: u64,
    pub n_dominant: u64,
    pub n_dominant_wrong: u64,
    pub n_nondominant_wrong: u64,
}

impl DecompositionCounts {
    pub fn n_wrong(&self) -> u64 {
        self.n_dominant_wrong + self.n_nondominant_wrong
    }

    pub fn merge(&self, other: &DecompositionCounts) -> DecompositionCounts {
        DecompositionCounts {
            n_test: self.n_test + other.n_test,
            n_dominant: self.n_dominant + other.n_dominant,
            n_dominant_wrong: self.n_dominant_wrong + other.n_dominant_wrong,
            n_nondominant_wrong: self.n_nondominant_wrong + other.n_nondominant_wrong,
        }
    }
}

/// Error rate split by whether class dominance held. Conditional rates over
/// an empty conditioning set are reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorDecomposition {
    pub l: f64,
    pub p_d: f64,
    pub p1: f64,
    pub p2: f64,
    pub counts: DecompositionCounts,
}

impl ErrorDecomposition {
    pub fn from_counts(counts: DecompositionCounts) -> Result<Self> {
        let c = counts;
        if c.n_test == 0 {
            return Err(Error::EmptyInput);
        }
        if c.n_dominant > c.n_test
            || c.n_dominant_wrong > c.n_dominant
            || c.n_nondominant_wrong > c.n_test - c.n_dominant
        {
            return Err(Error::InvalidArgument(format!("inconsistent counts {c:?}")));
        }
        let rate = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        Ok(ErrorDecomposition {
            l: rate(c.n_wrong(), c.n_test),
            p_d: rate(c.n_dominant, c.n_test),
            p1: rate(c.n_dominant_wrong, c.n_dominant),
            p2: rate(c.n_nondominant_wrong, c.n_test - c.n_dominant),
            counts,
        })
    }

    pub fn dominance_error(&self) -> f64 {
        1.0 - self.p_d
    }

    /// Checks `L = P_D * P1 + (1 - P_D) * P2` in exact rational arithmetic.
    pub fn identity_holds_exactly(&self) -> bool {
        let c = self.counts;
        let ratio = |num: u64, den: u64| {
            if den == 0 {
                Ratio::from_integer(0u64)
            } else {
                Ratio::new(num, den)
            }
        };
        let l = ratio(c.n_wrong(), c.n_test);
        let p_d = ratio(c.n_dominant, c.n_test);
        let q_d = ratio(c.n_test - c.n_dominant, c.n_test);
        let p1 = ratio(c.n_dominant_wrong, c.n_dominant);
        let p2 = ratio(c.n_nondominant_wrong, c.n_test - c.n_dominant);
        l == p_d * p1 + q_d * p2
    }

    /// `|L - (P_D P1 + (1 - P_D) P2)|` in floating point.
    pub fn identity_gap(&self) -> f64 {
        (self.l - (self.p_d * self.p1 + (1.0 - self.p_d) * self.p2)).abs()
    }
}

/// Builds the decomposition from `(dominates, correct)` records.
pub fn decompose_errors(records: &[(bool, bool)]) -> Result<ErrorDecomposition> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counts = DecompositionCounts {
        n_test: records.len() as u64,
        n_dominant: 0,
        n_dominant_wrong: 0,
        n_nondominant_wrong: 0,
    };
    for &(dominates, correct) in records {
        match (dominates, correct) {
            (true, true) => counts.n_dominant += 1,
            (true, false) => {
                counts.n_dominant += 1;
                counts.n_dominant_wrong += 1;
            }
            (false, false) => counts.n_nondominant_wrong += 1,
            (false, true) => {}
        }
    }
    ErrorDecomposition::from_counts(counts)
}

/// Settings for [`angle_condition_scan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Candidate thresholds `c`, radians in `[0, pi/2)`.
    pub c_grid: Vec<f64>,
    /// Submatrix size `s`.
    pub sparsity: usize,
    /// Random `s`-column submatrices drawn per test point (and per `c` for the
    /// extended pool). Pools with at most this many subsets are enumerated.
    pub samples: usize,
    pub seed: u64,
}

impl ScanConfig {
    pub fn new(c_grid: Vec<f64>, sparsity: usize) -> Self {
        ScanConfig {
            c_grid,
            sparsity,
            samples: 200,
            seed: 0,
        }
    }
}

/// Condition flags for one test pair `(x, y)`; the flag vectors are indexed
/// like the `c` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScan {
    pub test_index: usize,
    pub label: usize,
    /// Smallest angle between `x` and a class-`y` training column.
    pub nearest_within: f64,
    /// Largest angle between `x` and a class-`y` training column.
    pub farthest_within: f64,
    /// Smallest sampled angle between `x` and the span of `s` other-class columns.
    pub between: f64,
    /// Whether every `s`-subset of the other-class pool was examined.
    pub exhaustive: bool,
    /// All class-`y` columns within `c`, other-class spans beyond `c`.
    pub strict: Vec<bool>,
    /// Some class-`y` column within `c`, other-class spans beyond `c`.
    pub nearest: Vec<bool>,
    /// Some class-`y` column within `c`; spans of other-class columns and
    /// far class-`y` columns beyond `c`.
    pub extended: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub c_grid: Vec<f64>,
    pub sparsity: usize,
    pub samples: usize,
    pub seed: u64,
    pub pairs: Vec<PairScan>,
    /// Fraction of pairs for which some `c` satisfies the strict condition.
    pub q_strict: f64,
    /// Fraction of pairs for which some `c` satisfies the nearest-neighbour
    /// form of the condition.
    pub q_nearest: f64,
    /// Fraction of pairs for which some `c` satisfies the extended condition.
    pub q_extended: f64,
}

/// Estimates how often the principal-angle condition holds on `test`, using
/// `train` as the training sample.
pub fn angle_condition_scan(train: &LabeledDataset, test: &LabeledDataset, config: &ScanConfig) -> Result<ScanReport> {
    if config.sparsity == 0 {
        return Err(Error::InvalidArgument("sparsity must be at least 1".into()));
    }
    if config.samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    if let Some(c) = config.c_grid.iter().find(|c| !(**c >= 0.0 && **c < FRAC_PI_2)) {
        return Err(Error::InvalidArgument(format!("threshold {c} outside [0, pi/2)")));
    }
    if train.dim() != test.dim() {
        return Err(Error::DimensionMismatch(format!(
            "training dimension {} vs test dimension {}",
            train.dim(),
            test.dim()
        )));
    }
    let counts = train.class_counts();
    if let Some(k) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InsufficientData(format!("class {} has no training columns", k + 1)));
    }
    if let Some(&bad) = test.labels.iter().find(|&&y| y > train.n_classes) {
        return Err(Error::InsufficientData(format!("test label {bad} has no training class")));
    }

    let x_mat = train.features.as_matrix();
    let pairs: Vec<PairScan> = (0..test.n_obs())
        .into_par_iter()
        .map(|t| {
            let x = test.features.column(t).clone_owned();
            scan_pair(x_mat, &train.labels, &x, t, test.labels[t], config)
        })
        .collect::<Result<_>>()?;

    let q = |pick: fn(&PairScan) -> &Vec<bool>| {
        if pairs.is_empty() {
            0.0
        } else {
            pairs.iter().filter(|p| pick(p).iter().any(|&f| f)).count() as f64 / pairs.len() as f64
        }
    };
    Ok(ScanReport {
        c_grid: config.c_grid.clone(),
        sparsity: config.sparsity,
        samples: config.samples,
        seed: config.seed,
        q_strict: q(|p| &p.strict),
        q_nearest: q(|p| &p.nearest),
        q_extended: q(|p| &p.extended),
        pairs,
    })
}

fn scan_pair(
    x_mat: &DMatrix<f64>,
    labels: &[usize],
    x: &DVector<f64>,
    test_index: usize,
    y: usize,
    config: &ScanConfig,
) -> Result<PairScan> {
    let pair_seed = derive_seed(config.seed, test_index as u64);
    let angles: Vec<f64> = (0..x_mat.ncols())
        .map(|i| angle_to_vector(x.column(0), x_mat.column(i)))
        .collect();
    let within: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == y).collect();
    let others: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != y).collect();
    let nearest_within = within.iter().map(|&i| angles[i]).fold(f64::INFINITY, f64::min);
    let farthest_within = within.iter().map(|&i| angles[i]).fold(0.0, f64::max);

    let (between, exhaustive) = min_span_angle(x_mat, x, &others, config, derive_seed(pair_seed, 0))?;

    let mut strict = Vec::with_capacity(config.c_grid.len());
    let mut nearest = Vec::with_capacity(config.c_grid.len());
    let mut extended = Vec::with_capacity(config.c_grid.len());
    for (ci, &c) in config.c_grid.iter().enumerate() {
        strict.push(farthest_within <= c && between > c);
        let exists = nearest_within <= c;
        nearest.push(exists && between > c);
        let ext = if !exists {
            false
        } else {
            let far: Vec<usize> = within.iter().copied().filter(|&i| angles[i] > c).collect();
            if far.is_empty() {
                between > c
            } else {
                let mut pool = others.clone();
                pool.extend(far);
                pool.sort_unstable();
                let (angle, _) = min_span_angle(x_mat, x, &pool, config, derive_seed(pair_seed, ci as u64 + 1))?;
                angle > c
            }
        };
        extended.push(ext);
    }

    Ok(PairScan {
        test_index,
        label: y,
        nearest_within,
        farthest_within,
        between,
        exhaustive,
        strict,
        nearest,
        extended,
    })
}

/// Smallest principal angle between `x` and spans of `s`-column subsets of
/// `pool`: exhaustive when the pool is small, sampled otherwise.
fn min_span_angle(
    x_mat: &DMatrix<f64>,
    x: &DVector<f64>,
    pool: &[usize],
    config: &ScanConfig,
    seed: u64,
) -> Result<(f64, bool)> {
    if pool.is_empty() {
        return Ok((FRAC_PI_2, true));
    }
    let s = config.sparsity;
    if pool.len() <= s {
        return Ok((principal_angle(x, &x_mat.select_columns(pool))?, true));
    }
    let angle_of = |subset: &[usize]| -> Result<f64> {
        let cols: Vec<usize> = subset.iter().map(|&k| pool[k]).collect();
        principal_angle(x, &x_mat.select_columns(&cols))
    };
    let mut best = FRAC_PI_2;
    if binomial_at_most(pool.len(), s, config.samples) {
        let mut combo: Vec<usize> = (0..s).collect();
        loop {
            best = best.min(angle_of(&combo)?);
            if !next_combination(&mut combo, pool.len()) {
                break;
            }
        }
        Ok((best, true))
    } else {
        let mut rng = rng(seed);
        for _ in 0..config.samples {
            let subset = sample(&mut rng, pool.len(), s).into_vec();
            best = best.min(angle_of(&subset)?);
        }
        Ok((best, false))
    }
}

fn binomial_at_most(n: usize, k: usize, limit: usize) -> bool {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > limit as u128 {
            return false;
        }
    }
    true
}

fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in (i + 1)..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
