//! Benchmark report types and their JSON, CSV and SVG renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{DecompositionCounts, ErrorDecomposition};
use crate::error::{Error, Result};
use crate::harness::config::BenchConfig;
use crate::solvers::SolverKind;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub dim: usize,
    pub n_obs: usize,
    pub n_classes: usize,
    pub class_counts: Vec<usize>,
    pub similarity: bool,
    pub metadata: BTreeMap<String, String>,
}

/// Replicate-mean curves of one solver, indexed by `s - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverCurves {
    pub solver: SolverKind,
    /// SRC error `L`.
    pub l: Vec<f64>,
    /// Class dominance error `1 - P_D`.
    pub dominance_error: Vec<f64>,
    /// Error rate given dominance.
    pub p1: Vec<f64>,
    /// Error rate given no dominance.
    pub p2: Vec<f64>,
    /// Fraction of test observations whose path was shorter than `s` and
    /// held its last coefficients.
    pub held_fraction: Vec<f64>,
    /// `held_fraction > 0`.
    pub padded: Vec<bool>,
    /// Decomposition of the counts pooled over all replicates.
    pub pooled: Vec<ErrorDecomposition>,
    /// Observations on which the solver failed, summed over replicates.
    pub failures: u64,
    /// Dominant, positively dominant and still misclassified.
    pub certificate_violations: u64,
}

/// Replicate-mean error curve of one baseline, indexed by `d - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineCurve {
    pub name: String,
    pub projection: String,
    pub error: Vec<f64>,
    /// `d` past the largest feasible projection dimension, holding the last
    /// valid value.
    pub padded: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSolver {
    pub solver: SolverKind,
    /// Per-`s` counts over the observations the solver handled.
    pub counts: Vec<DecompositionCounts>,
    /// Per-`s` misclassifications, tallied directly from the decisions.
    pub misclassified: Vec<u64>,
    pub held: Vec<u64>,
    pub certificate_violations: u64,
    pub failures: Vec<FailureRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub test_index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateBaseline {
    pub name: String,
    pub error: Vec<f64>,
    pub valid_dims: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub seed: u64,
    pub train_class_counts: Vec<usize>,
    pub test_class_counts: Vec<usize>,
    pub solvers: Vec<ReplicateSolver>,
    pub baselines: Vec<ReplicateBaseline>,
}

/// Wall-clock seconds per phase, summed over replicates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub load: f64,
    pub split: f64,
    pub solvers: BTreeMap<String, f64>,
    pub baselines: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub config: BenchConfig,
    pub dataset: DatasetSummary,
    pub replicate_seeds: Vec<u64>,
    pub solvers: Vec<SolverCurves>,
    pub baselines: Vec<BaselineCurve>,
    pub replicates: Vec<ReplicateRecord>,
    pub timings: Timings,
}

type Metric = fn(&SolverCurves) -> &Vec<f64>;

impl BenchmarkReport {
    /// The report with wall-clock timings zeroed, for reproducibility
    /// comparisons.
    pub fn without_timings(&self) -> BenchmarkReport {
        BenchmarkReport {
            timings: Timings::default(),
            ..self.clone()
        }
    }

    pub fn solver(&self, kind: SolverKind) -> Option<&SolverCurves> {
        self.solvers.iter().find(|c| c.solver == kind)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ParseError {
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// One row per (solver or baseline, index, metric).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,name,index,metric,value\n");
        for c in &self.solvers {
            for s in 0..c.l.len() {
                for (metric, v) in [
                    ("l", c.l[s]),
                    ("dominance_error", c.dominance_error[s]),
                    ("p1", c.p1[s]),
                    ("p2", c.p2[s]),
                ] {
                    let _ = writeln!(out, "solver,{},{},{metric},{v}", c.solver, s + 1);
                }
            }
        }
        for b in &self.baselines {
            for (d, v) in b.error.iter().enumerate() {
                let _ = writeln!(out, "baseline,{},{},error,{v}", b.name, d + 1);
            }
        }
        out
    }

    /// Three panels: `L`, `1 - P_D` and `P2` against `s`. Baseline errors are
    /// overlaid on the first panel (against `d`) when present.
    pub fn to_svg(&self) -> String {
        const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
        const PANEL_W: f64 = 300.0;
        const PANEL_H: f64 = 220.0;
        const LEFT: f64 = 50.0;
        const TOP: f64 = 40.0;
        const GAP: f64 = 70.0;
        let width = LEFT + 3.0 * PANEL_W + 2.0 * GAP + 20.0;
        let height = TOP + PANEL_H + 90.0;
        let x_max = self
            .solvers
            .iter()
            .map(|c| c.l.len())
            .chain(self.baselines.iter().map(|b| b.error.len()))
            .max()
            .unwrap_or(1)
            .max(2);

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let panels: [(&str, Metric); 3] = [
            ("SRC error L", |c| &c.l),
            ("dominance error 1 - P_D", |c| &c.dominance_error),
            ("P2 (error without dominance)", |c| &c.p2),
        ];
        for (p, (title, series)) in panels.iter().enumerate() {
            let x0 = LEFT + p as f64 * (PANEL_W + GAP);
            let px = |i: usize| x0 + PANEL_W * i as f64 / (x_max - 1) as f64;
            let py = |v: f64| TOP + PANEL_H * (1.0 - v.clamp(0.0, 1.0));
            let _ = writeln!(
                svg,
                r#"<rect x="{x0:.2}" y="{TOP:.2}" width="{PANEL_W:.2}" height="{PANEL_H:.2}" fill="none" stroke="black"/>"#
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{title}</text>"#,
                x0 + PANEL_W / 2.0,
                TOP - 10.0
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">sparsity level s</text>"#,
                x0 + PANEL_W / 2.0,
                TOP + PANEL_H + 30.0
            );
            for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
                let _ = writeln!(
                    svg,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{tick:.2}</text>"#,
                    x0 - 4.0,
                    py(tick) + 4.0
                );
            }
            for tick in [1, x_max] {
                let _ = writeln!(
                    svg,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{tick}</text>"#,
                    px(tick - 1),
                    TOP + PANEL_H + 14.0
                );
            }
            for (i, c) in self.solvers.iter().enumerate() {
                let points: Vec<String> = series(c)
                    .iter()
                    .enumerate()
                    .map(|(s, &v)| format!("{:.2},{:.2}", px(s), py(v)))
                    .collect();
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                    PALETTE[i % PALETTE.len()],
                    points.join(" ")
                );
            }
            if p == 0 {
                for (i, b) in self.baselines.iter().enumerate() {
                    let points: Vec<String> = b
                        .error
                        .iter()
                        .enumerate()
                        .map(|(d, &v)| format!("{:.2},{:.2}", px(d), py(v)))
                        .collect();
                    let _ = writeln!(
                        svg,
                        r#"<polyline fill="none" stroke="{}" stroke-width="1" stroke-dasharray="4 3" points="{}"/>"#,
                        PALETTE[(self.solvers.len() + i) % PALETTE.len()],
                        points.join(" ")
                    );
                }
            }
        }
        let legend_y = TOP + PANEL_H + 55.0;
        let names = self
            .solvers
            .iter()
            .map(|c| (c.solver.name().to_string(), false))
            .chain(self.baselines.iter().map(|b| (format!("{} (d)", b.name), true)));
        for (i, (name, dashed)) in names.enumerate() {
            let x = LEFT + i as f64 * 130.0;
            let dash = if dashed { r#" stroke-dasharray="4 3""# } else { "" };
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{legend_y:.2}" x2="{:.2}" y2="{legend_y:.2}" stroke="{}" stroke-width="2"{dash}/>"#,
                x + 20.0,
                PALETTE[i % PALETTE.len()]
            );
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}">{name}</text>"#,
                x + 25.0,
                legend_y + 4.0
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportSink {
    Json,
    Csv,
    Svg,
}

impl ReportSink {
    pub fn extension(self) -> &'static str {
        match self {
            ReportSink::Json => "json",
            ReportSink::Csv => "csv",
            ReportSink::Svg => "svg",
        }
    }
}

impl FromStr for ReportSink {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(ReportSink::Json),
            "csv" => Ok(ReportSink::Csv),
            "svg" => Ok(ReportSink::Svg),
            other => Err(Error::InvalidArgument(format!("unknown report format `{other}`"))),
        }
    }
}

/// Writes `report.<ext>` into `out_dir` and returns its path.
pub fn emit_report(report: &BenchmarkReport, sink: ReportSink, out_dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("report.{}", sink.extension()));
    let body = match sink {
        ReportSink::Json => report.to_json()?,
        ReportSink::Csv => report.to_csv(),
        ReportSink::Svg => report.to_svg(),
    };
    fs::write(&path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}
