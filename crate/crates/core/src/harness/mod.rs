//! Dataset ingestion, hold-out splitting, the Monte Carlo benchmark and
//! report emission.

pub mod bench;
pub mod config;
pub mod io;
pub mod report;
pub mod split;

pub use bench::{prepare_replicate, run_benchmark, run_benchmark_on, ReplicateData};
pub use config::{BenchConfig, DatasetSource};
pub use io::{load_dataset, DataFormat, LoadedData};
pub use report::{emit_report, BenchmarkReport, ReportSink};
pub use split::{holdout_split, Split};
