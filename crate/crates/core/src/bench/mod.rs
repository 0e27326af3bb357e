//! Replicated benchmarks: configuration, the common-random-numbers harness,
//! regret summaries, record persistence and SVG charts.

mod config;
mod harness;
mod io;
mod summary;
pub mod svg;

pub use config::{ExperimentConfig, SeGrid};
pub use harness::{
    replication_instance, run_benchmark, run_benchmark_mode, run_replication, AllocationProfile,
    BenchmarkOutput, Mode, TrialFailure, TrialRecord,
};
pub use io::{read_records, write_records, RecordFormat, CSV_HEADER};
pub use summary::{
    best_by_mean, ks_distance, regret_histogram, relative_gain, Histogram, RegretSummary,
};
