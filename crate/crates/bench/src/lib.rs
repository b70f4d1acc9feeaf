// SPDX-License-Identifier: Apache-2.0

//! Benchmark harness: timed workload sweeps over the CLI and REST access
//! paths, summary statistics, linear fits, REST/CLI ratios and the
//! saturation benchmark.

pub mod config;
pub mod fit;
pub mod harness;
pub mod report;
pub mod saturation;
pub mod stats;
pub mod workload;

pub use config::{BenchmarkConfig, Interface, Profile, ResetMode};
pub use fit::{fit_linear, FitError, LinearFit};
pub use harness::{BenchmarkResults, BenchmarkSample, Harness, HarnessError};
pub use report::{analyze, emit_report, Report, ReportError};
pub use saturation::{run_saturation, SaturationResult};
pub use stats::{summarize, SummaryStats};
