//! `srcbench`: run the SRC benchmark, classify, diagnose and generate data.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use src_core::diagnostics::{angle_condition_scan, ScanConfig};
use src_core::harness::bench::{prepare_replicate, slice_path, BENCH_TOL};
use src_core::harness::io::write_feature_csv;
use src_core::harness::{emit_report, run_benchmark, BenchConfig, DatasetSource, LoadedData, ReportSink};
use src_core::{Error, ErrorKind, SolverKind, StopCriteria};

#[derive(Parser)]
#[command(name = "srcbench", version, about = "Sparse representation classification benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo benchmark from a config file plus flag overrides.
    Bench(BenchArgs),
    /// Split a dataset once and print one SRC decision per test observation.
    Classify(ClassifyArgs),
    /// Run the principal angle condition scan on a hold-out split.
    Diagnose(DiagnoseArgs),
    /// Write a generated dataset as feature CSV.
    Synth(SynthArgs),
}

#[derive(Args)]
struct DataArgs {
    /// File path, or a generator descriptor such as
    /// `cone:K=5,m=50,within=5,between=90,n=50,seed=1`.
    #[arg(long)]
    dataset: Option<String>,
    /// Input format: `feature` or `similarity`.
    #[arg(long)]
    format: Option<String>,
    /// Shorthand for `--format similarity`.
    #[arg(long)]
    similarity: bool,
    #[arg(long)]
    seed: Option<u64>,
}

impl DataArgs {
    fn similarity(&self) -> Result<Option<bool>, Error> {
        if self.similarity {
            return Ok(Some(true));
        }
        match self.format.as_deref() {
            None => Ok(None),
            Some(f) => match f.parse::<src_core::harness::DataFormat>()? {
                src_core::harness::DataFormat::FeatureCsv => Ok(Some(false)),
                src_core::harness::DataFormat::SimilarityCsv => Ok(Some(true)),
            },
        }
    }

    fn load(&self) -> Result<LoadedData, Error> {
        let descriptor = self
            .dataset
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("--dataset is required".into()))?;
        let source: DatasetSource = descriptor.parse()?;
        source.load(self.similarity()?.unwrap_or(false))
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Config file of `key = value` lines.
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated solvers (omp, homotopy, marginal, full).
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    sparsity_max: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Comma-separated report formats (json, csv, svg).
    #[arg(long, default_value = "json")]
    emit: String,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "omp")]
    solver: String,
    /// Sparsity level used for the decisions.
    #[arg(long, default_value_t = 10)]
    sparsity_max: usize,
    #[arg(long, default_value_t = 0.5)]
    split_fraction: f64,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Subset size of the scanned spans.
    #[arg(long, default_value_t = 1)]
    sparsity_max: usize,
    /// Comma-separated angle thresholds in degrees.
    #[arg(long, default_value = "5,10,15,20,30,45,60,75")]
    c_grid: String,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0.5)]
    split_fraction: f64,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn bench(args: &BenchArgs) -> Result<(), Error> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            BenchConfig::parse(&text)?
        }
        None => BenchConfig::default(),
    };
    if let Some(d) = &args.data.dataset {
        config.set("dataset", d)?;
    }
    if let Some(sim) = args.data.similarity()? {
        config.similarity_input = sim;
    }
    if let Some(seed) = args.data.seed {
        config.master_seed = seed;
    }
    if let Some(s) = &args.solver {
        config.set("solvers", s)?;
    }
    if let Some(s) = args.sparsity_max {
        config.sparsity_max = s;
    }
    if let Some(r) = args.replicates {
        config.monte_carlo = r;
    }
    config.validate()?;
    let sinks = args
        .emit
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<ReportSink>())
        .collect::<Result<Vec<_>, _>>()?;

    let report = run_benchmark(&config)?;
    for c in &report.solvers {
        let (best_s, best) = c
            .l
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        println!(
            "{:<9} best L = {best:.4} at s = {}  (1-P_D {:.4}, P1 {:.4}, P2 {:.4}, failures {})",
            c.solver.name(),
            best_s + 1,
            c.dominance_error[best_s],
            c.p1[best_s],
            c.p2[best_s],
            c.failures
        );
    }
    for b in &report.baselines {
        let (best_d, best) = b
            .error
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
        println!("{:<9} best error = {best:.4} at d = {} ({})", b.name, best_d + 1, b.projection);
    }
    for sink in sinks {
        let path = emit_report(&report, sink, &args.out_dir)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn classify(args: &ClassifyArgs) -> Result<(), Error> {
    let solver: SolverKind = args.solver.parse()?;
    let data = args.data.load()?;
    let rep = prepare_replicate(&data.dataset, args.split_fraction, args.data.seed.unwrap_or(0))?;
    let stop = StopCriteria::new(args.sparsity_max, BENCH_TOL, BENCH_TOL)?;
    let x_mat = rep.train.features.as_matrix();
    let mut out = io::stdout().lock();
    writeln!(out, "test_index,observation,true_label,predicted_label")?;
    let mut wrong = 0usize;
    let mut failed = 0usize;
    for t in 0..rep.test.n_obs() {
        let x = rep.test.features.column(t).clone_owned();
        let y = rep.test.labels[t];
        let outcome = solver
            .solve(x_mat, &x, &stop)
            .and_then(|p| slice_path(&p, solver, &rep.train, &x, y, args.sparsity_max));
        match outcome {
            Ok(per_s) => {
                let o = per_s[args.sparsity_max - 1];
                if !o.correct {
                    wrong += 1;
                }
                writeln!(out, "{t},{},{y},{}", rep.split.test[t], o.label)?;
            }
            Err(e) => {
                failed += 1;
                eprintln!("observation {}: {e}", rep.split.test[t]);
            }
        }
    }
    let scored = rep.test.n_obs() - failed;
    if scored == 0 {
        return Err(Error::NumericalBreakdown(format!("{solver} failed on every test observation")));
    }
    eprintln!(
        "{solver} at s = {}: {wrong}/{scored} misclassified ({:.4}), {failed} failed",
        args.sparsity_max,
        wrong as f64 / scored as f64
    );
    Ok(())
}

fn diagnose(args: &DiagnoseArgs) -> Result<(), Error> {
    let degrees: Vec<&str> = args.c_grid.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    let c_grid = degrees
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map(f64::to_radians)
                .map_err(|_| Error::InvalidArgument(format!("invalid angle `{s}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let data = args.data.load()?;
    let seed = args.data.seed.unwrap_or(0);
    let rep = prepare_replicate(&data.dataset, args.split_fraction, seed)?;
    let mut config = ScanConfig::new(c_grid, args.sparsity_max);
    config.samples = args.samples;
    config.seed = seed;
    let report = angle_condition_scan(&rep.train, &rep.test, &config)?;
    let mut out = io::stdout().lock();
    writeln!(out, "c_degrees,q_strict,q_nearest,q_extended")?;
    for (i, deg) in degrees.iter().enumerate() {
        let frac = |f: fn(&src_core::diagnostics::PairScan) -> &Vec<bool>| {
            report.pairs.iter().filter(|p| f(p)[i]).count() as f64 / report.pairs.len() as f64
        };
        writeln!(
            out,
            "{deg},{:.4},{:.4},{:.4}",
            frac(|p| &p.strict),
            frac(|p| &p.nearest),
            frac(|p| &p.extended)
        )?;
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<(), Error> {
    let descriptor = args
        .data
        .dataset
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("--dataset is required".into()))?;
    let mut source: DatasetSource = descriptor.parse()?;
    if let Some(seed) = args.data.seed {
        match &mut source {
            DatasetSource::Cone { seed: s, .. } | DatasetSource::Subspace { seed: s, .. } => *s = seed,
            DatasetSource::File { .. } => {}
        }
    }
    let name = match &source {
        DatasetSource::Cone { .. } => "cone",
        DatasetSource::Subspace { .. } => "subspace",
        DatasetSource::File { .. } => {
            return Err(Error::InvalidArgument("synth needs a cone: or subspace: descriptor".into()));
        }
    };
    let data = source.load(false)?;
    fs::create_dir_all(&args.out_dir)?;
    let path = Path::new(&args.out_dir).join(format!("{name}.csv"));
    write_feature_csv(&data.dataset, &path)?;
    println!(
        "wrote {} ({} observations, dimension {}, {} classes)",
        path.display(),
        data.dataset.n_obs(),
        data.dataset.dim(),
        data.dataset.n_classes
    );
    Ok(())
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Numerical => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Bench(a) => bench(a),
        Command::Classify(a) => classify(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(msg)) if msg.contains("Broken pipe") => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
