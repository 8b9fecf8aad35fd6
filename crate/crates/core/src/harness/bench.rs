//! The Monte Carlo hold-out benchmark.
//!
//! Each replicate splits the data, normalizes both sides, computes one solver
//! path per test observation and slices it at every sparsity level, then
//! scores the kNN and LDA baselines over projection dimensions.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::baselines::{knn_vote, ClassMoments, LdaModel, Projection, ProjectionKind};
use crate::classifier::{decide, ClassContributions};
use crate::diagnostics::{DecompositionCounts, DominanceReport, ErrorDecomposition};
use crate::error::{Error, Result};
use crate::harness::config::BenchConfig;
use crate::harness::io::LoadedData;
use crate::harness::report::{
    BaselineCurve, BenchmarkReport, DatasetSummary, FailureRecord, ReplicateBaseline, ReplicateRecord,
    ReplicateSolver, SolverCurves, Timings, SCHEMA_VERSION,
};
use crate::harness::split::{holdout_indices, Split};
use crate::solvers::FullRegression;
use crate::solvers::{PathStep, SolverKind, SolverPath, StopCriteria};
use crate::synth::LabeledDataset;

/// Residual and orthogonality tolerances used for every benchmark path.
pub const BENCH_TOL: f64 = 1e-8;

/// Outcome of one test observation at one sparsity level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub label: usize,
    pub correct: bool,
    pub dominates: bool,
    pub positively_dominates: bool,
    pub held: bool,
}

/// The normalized train and test sides of one replicate.
#[derive(Debug, Clone)]
pub struct ReplicateData {
    pub seed: u64,
    pub split: Split,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

/// Splits `data` with `seed` and normalizes both sides.
pub fn prepare_replicate(data: &LabeledDataset, fraction: f64, seed: u64) -> Result<ReplicateData> {
    let split = holdout_indices(&data.labels, data.n_classes, fraction, seed)?;
    let train = data.subset(&split.train, format!("{}-train", data.name))?.normalized()?;
    let test = data.subset(&split.test, format!("{}-test", data.name))?.normalized()?;
    Ok(ReplicateData {
        seed,
        split,
        train,
        test,
    })
}

fn step_outcome(
    x_mat: &DMatrix<f64>,
    labels: &[usize],
    n_classes: usize,
    step: &PathStep,
    x: &DVector<f64>,
    y: usize,
) -> Result<Outcome> {
    let contributions = ClassContributions::from_support(x_mat, step.support(), labels, n_classes)?;
    let decision = decide(&contributions, x, step.sparsity());
    let report = DominanceReport::from_contributions(&contributions, y, x)?;
    Ok(Outcome {
        label: decision.label,
        correct: decision.label == y,
        dominates: report.dominates,
        positively_dominates: report.positively_dominates,
        held: false,
    })
}

/// Outcomes at `s = 1..=sparsity_max` from one path. Levels past the end of
/// a subset path reuse its last step and are marked held.
pub fn slice_path(
    path: &SolverPath,
    solver: SolverKind,
    train: &LabeledDataset,
    x: &DVector<f64>,
    y: usize,
    sparsity_max: usize,
) -> Result<Vec<Outcome>> {
    if path.is_empty() {
        return Err(Error::NumericalBreakdown("solver returned an empty path".into()));
    }
    let x_mat = train.features.as_matrix();
    let mut out = Vec::with_capacity(sparsity_max);
    let mut cached: Option<(usize, Outcome)> = None;
    for s in 1..=sparsity_max {
        let idx = s.min(path.len()) - 1;
        let base = match cached {
            Some((i, o)) if i == idx => o,
            _ => {
                let o = step_outcome(x_mat, &train.labels, train.n_classes, &path.steps[idx], x, y)?;
                cached = Some((idx, o));
                o
            }
        };
        out.push(Outcome {
            held: solver != SolverKind::Full && path.is_held(s),
            ..base
        });
    }
    Ok(out)
}

/// Per-observation outcomes of one solver on one replicate, in test order.
/// Failed observations carry the error message.
pub fn solver_outcomes(
    solver: SolverKind,
    rep: &ReplicateData,
    sparsity_max: usize,
) -> Result<Vec<std::result::Result<Vec<Outcome>, String>>> {
    let stop = StopCriteria::new(sparsity_max, BENCH_TOL, BENCH_TOL)?;
    let x_mat = rep.train.features.as_matrix();
    let full = (solver == SolverKind::Full).then(|| FullRegression::new(x_mat));
    Ok((0..rep.test.n_obs())
        .into_par_iter()
        .map(|t| {
            let x = rep.test.features.column(t).clone_owned();
            let y = rep.test.labels[t];
            let path = match &full {
                Some(f) => f.fit(x_mat, &x).map(|fit| fit.into_path()),
                None => solver.solve(x_mat, &x, &stop),
            };
            path.and_then(|p| slice_path(&p, solver, &rep.train, &x, y, sparsity_max))
                .map_err(|e| e.to_string())
        })
        .collect())
}

fn tally(solver: SolverKind, outcomes: &[std::result::Result<Vec<Outcome>, String>], sparsity_max: usize) -> ReplicateSolver {
    let empty = DecompositionCounts {
        n_test: 0,
        n_dominant: 0,
        n_dominant_wrong: 0,
        n_nondominant_wrong: 0,
    };
    let mut counts = vec![empty; sparsity_max];
    let mut misclassified = vec![0u64; sparsity_max];
    let mut held = vec![0u64; sparsity_max];
    let mut certificate_violations = 0;
    let mut failures = Vec::new();
    for (t, result) in outcomes.iter().enumerate() {
        let per_s = match result {
            Ok(v) => v,
            Err(message) => {
                failures.push(FailureRecord {
                    test_index: t,
                    message: message.clone(),
                });
                continue;
            }
        };
        for (s, o) in per_s.iter().enumerate() {
            let c = &mut counts[s];
            c.n_test += 1;
            if o.dominates {
                c.n_dominant += 1;
                if !o.correct {
                    c.n_dominant_wrong += 1;
                }
            } else if !o.correct {
                c.n_nondominant_wrong += 1;
            }
            if !o.correct {
                misclassified[s] += 1;
                if o.dominates && o.positively_dominates {
                    certificate_violations += 1;
                }
            }
            if o.held {
                held[s] += 1;
            }
        }
    }
    ReplicateSolver {
        solver,
        counts,
        misclassified,
        held,
        certificate_violations,
        failures,
    }
}

/// Projected train and test coordinates (`D x n` each) for the baselines.
fn baseline_coordinates(
    config: &BenchConfig,
    rep: &ReplicateData,
    spectral: Option<&Projection>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    match spectral {
        Some(p) => Ok((p.coordinates(&rep.split.train)?, p.coordinates(&rep.split.test)?)),
        None => {
            let train = rep.train.features.as_matrix();
            let dims = config.baseline_dims.min(train.nrows()).min(train.ncols());
            let p = Projection::fit_pca(train, dims)?;
            Ok((p.project(train)?, p.project(rep.test.features.as_matrix())?))
        }
    }
}

fn pad(mut values: Vec<f64>, len: usize) -> Vec<f64> {
    let last = values.last().copied().unwrap_or(0.0);
    values.resize(len, last);
    values
}

fn run_baselines(config: &BenchConfig, rep: &ReplicateData, spectral: Option<&Projection>) -> Result<Vec<ReplicateBaseline>> {
    let (z_train, z_test) = baseline_coordinates(config, rep, spectral)?;
    let dims = z_train.nrows();
    let n_test = z_test.ncols();
    let labels = &rep.train.labels;
    let k = config.knn_k;

    let knn_labels: Vec<Vec<usize>> = (0..n_test)
        .into_par_iter()
        .map(|t| {
            let mut dist = vec![0.0; z_train.ncols()];
            let mut out = Vec::with_capacity(dims);
            for d in 0..dims {
                let q = z_test[(d, t)];
                for (i, acc) in dist.iter_mut().enumerate() {
                    let diff = z_train[(d, i)] - q;
                    *acc += diff * diff;
                }
                out.push(knn_vote(&dist, labels, k)?);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let knn_error: Vec<f64> = (0..dims)
        .map(|d| {
            let wrong = (0..n_test).filter(|&t| knn_labels[t][d] != rep.test.labels[t]).count();
            wrong as f64 / n_test as f64
        })
        .collect();

    let moments = ClassMoments::new(&z_train, labels, rep.train.n_classes)?;
    let cov = moments.covariance();
    let lda_error = (1..=dims)
        .into_par_iter()
        .map(|d| {
            let means: Vec<DVector<f64>> = moments.means.iter().map(|m| m.rows(0, d).into_owned()).collect();
            let model = LdaModel::from_parts(&cov.view((0, 0), (d, d)).into_owned(), &means, &moments.counts, config.lda_ridge)?;
            let wrong = (0..n_test)
                .filter(|&t| model.classify(&z_test.view((0, t), (d, 1)).column(0).into_owned()) != rep.test.labels[t])
                .count();
            Ok(wrong as f64 / n_test as f64)
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(vec![
        ReplicateBaseline {
            name: "knn".into(),
            error: pad(knn_error, config.baseline_dims),
            valid_dims: dims,
        },
        ReplicateBaseline {
            name: "lda".into(),
            error: pad(lda_error, config.baseline_dims),
            valid_dims: dims,
        },
    ])
}

fn run_replicate(
    config: &BenchConfig,
    data: &LabeledDataset,
    spectral: Option<&Projection>,
    seed: u64,
) -> Result<(ReplicateRecord, Timings)> {
    let mut timings = Timings::default();
    let clock = Instant::now();
    let rep = prepare_replicate(data, config.split_fraction, seed)?;
    timings.split = clock.elapsed().as_secs_f64();

    let mut solvers = Vec::with_capacity(config.solvers.len());
    for &solver in &config.solvers {
        let clock = Instant::now();
        let outcomes = solver_outcomes(solver, &rep, config.sparsity_max)?;
        solvers.push(tally(solver, &outcomes, config.sparsity_max));
        timings
            .solvers
            .insert(solver.name().to_string(), clock.elapsed().as_secs_f64());
    }

    let clock = Instant::now();
    let baselines = run_baselines(config, &rep, spectral)?;
    timings.baselines = clock.elapsed().as_secs_f64();

    Ok((
        ReplicateRecord {
            seed,
            train_class_counts: rep.train.class_counts(),
            test_class_counts: rep.test.class_counts(),
            solvers,
            baselines,
        },
        timings,
    ))
}

/// Replicate-mean curves of one solver, plus pooled decompositions.
fn solver_curves(solver: SolverKind, index: usize, replicates: &[ReplicateRecord], sparsity_max: usize) -> Result<SolverCurves> {
    let mut curves = SolverCurves {
        solver,
        l: Vec::with_capacity(sparsity_max),
        dominance_error: Vec::with_capacity(sparsity_max),
        p1: Vec::with_capacity(sparsity_max),
        p2: Vec::with_capacity(sparsity_max),
        held_fraction: Vec::with_capacity(sparsity_max),
        padded: Vec::with_capacity(sparsity_max),
        pooled: Vec::with_capacity(sparsity_max),
        failures: replicates.iter().map(|r| r.solvers[index].failures.len() as u64).sum(),
        certificate_violations: replicates.iter().map(|r| r.solvers[index].certificate_violations).sum(),
    };
    for s in 0..sparsity_max {
        let mut sums = [0.0; 4];
        let mut used = 0usize;
        let mut pooled: Option<DecompositionCounts> = None;
        let mut held = 0u64;
        for r in replicates {
            let rs = &r.solvers[index];
            held += rs.held[s];
            let c = rs.counts[s];
            if c.n_test == 0 {
                continue;
            }
            let e = ErrorDecomposition::from_counts(c)?;
            for (acc, v) in sums.iter_mut().zip([e.l, e.dominance_error(), e.p1, e.p2]) {
                *acc += v;
            }
            used += 1;
            pooled = Some(pooled.map_or(c, |p| p.merge(&c)));
        }
        let Some(pooled) = pooled else {
            return Err(Error::NumericalBreakdown(format!(
                "{solver} failed on every test observation"
            )));
        };
        let n = used as f64;
        curves.l.push(sums[0] / n);
        curves.dominance_error.push(sums[1] / n);
        curves.p1.push(sums[2] / n);
        curves.p2.push(sums[3] / n);
        let frac = held as f64 / pooled.n_test as f64;
        curves.held_fraction.push(frac);
        curves.padded.push(held > 0);
        curves.pooled.push(ErrorDecomposition::from_counts(pooled)?);
    }
    Ok(curves)
}

fn baseline_curves(replicates: &[ReplicateRecord], projection: ProjectionKind, dims: usize) -> Vec<BaselineCurve> {
    let Some(first) = replicates.first() else {
        return Vec::new();
    };
    let projection = match projection {
        ProjectionKind::Pca => "pca",
        ProjectionKind::SpectralEmbedding => "spectral_embedding",
    };
    (0..first.baselines.len())
        .map(|b| {
            let n = replicates.len() as f64;
            let error = (0..dims)
                .map(|d| replicates.iter().map(|r| r.baselines[b].error[d]).sum::<f64>() / n)
                .collect();
            let valid = replicates.iter().map(|r| r.baselines[b].valid_dims).min().unwrap_or(0);
            BaselineCurve {
                name: first.baselines[b].name.clone(),
                projection: projection.to_string(),
                error,
                padded: (1..=dims).map(|d| d > valid).collect(),
            }
        })
        .collect()
}

/// Loads the configured dataset and runs the benchmark on it.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchmarkReport> {
    config.validate()?;
    let clock = Instant::now();
    let data = config.dataset.load(config.similarity_input)?;
    let load = clock.elapsed().as_secs_f64();
    let mut report = run_benchmark_on(config, &data)?;
    report.timings.load = load;
    report.timings.total += load;
    Ok(report)
}

/// Runs the benchmark on already loaded data.
pub fn run_benchmark_on(config: &BenchConfig, data: &LoadedData) -> Result<BenchmarkReport> {
    config.validate()?;
    let clock = Instant::now();
    let ds = &data.dataset;
    let spectral = if data.similarity {
        let dims = config.baseline_dims.min(ds.n_obs());
        Some(Projection::fit_spectral(ds.features.as_matrix(), dims)?)
    } else {
        None
    };
    let seeds: Vec<u64> = (0..config.monte_carlo as u64)
        .map(|r| config.master_seed.wrapping_add(r))
        .collect();
    let results: Vec<(ReplicateRecord, Timings)> = seeds
        .par_iter()
        .map(|&seed| run_replicate(config, ds, spectral.as_ref(), seed))
        .collect::<Result<_>>()?;

    let mut timings = Timings::default();
    let mut replicates = Vec::with_capacity(results.len());
    for (record, t) in results {
        timings.split += t.split;
        timings.baselines += t.baselines;
        for (k, v) in t.solvers {
            *timings.solvers.entry(k).or_insert(0.0) += v;
        }
        replicates.push(record);
    }
    let solvers = config
        .solvers
        .iter()
        .enumerate()
        .map(|(i, &s)| solver_curves(s, i, &replicates, config.sparsity_max))
        .collect::<Result<Vec<_>>>()?;
    let projection = if data.similarity {
        ProjectionKind::SpectralEmbedding
    } else {
        ProjectionKind::Pca
    };
    let baselines = baseline_curves(&replicates, projection, config.baseline_dims);
    timings.total = clock.elapsed().as_secs_f64();

    let mut metadata: BTreeMap<String, String> = ds.metadata.clone();
    if data.similarity {
        metadata.insert("spectral_input".into(), "matrix embedded as given".into());
    }
    Ok(BenchmarkReport {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        dataset: DatasetSummary {
            name: ds.name.clone(),
            dim: ds.dim(),
            n_obs: ds.n_obs(),
            n_classes: ds.n_classes,
            class_counts: ds.class_counts(),
            similarity: data.similarity,
            metadata,
        },
        replicate_seeds: seeds,
        solvers,
        baselines,
        replicates,
        timings,
    })
}
