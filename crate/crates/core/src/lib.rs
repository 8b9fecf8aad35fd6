//! Sparse representation classification (SRC).
//!
//! A test observation is regressed on a small subset of training columns
//! chosen by one of three subset-regression methods (orthogonal matching
//! pursuit, the l1 homotopy path, marginal regression) or on all of them, and
//! is then assigned to the class whose masked coefficients reconstruct it
//! best. Alongside the classifier the crate provides the class-dominance and
//! principal-angle diagnostics that explain when this works, synthetic data
//! generators, kNN/LDA baselines, and a reproducible Monte Carlo benchmark.

pub mod baselines;
pub mod classifier;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod solvers;
pub mod synth;

mod seeds;

pub use classifier::{class_residuals, src_classify, ClassContributions, SrcDecision};
pub use diagnostics::{decompose_errors, dominance_report, DominanceReport, ErrorDecomposition};
pub use error::{Error, ErrorKind, Result};
pub use linalg::DenseMatrix;
pub use seeds::derive_seed;
pub use solvers::{SolverKind, SolverPath, StopCriteria, StopReason};
pub use synth::LabeledDataset;
