// SPDX-License-Identifier: Apache-2.0

//! Aggregation of raw samples and the CSV/JSON files written per run.

use std::path::{Path, PathBuf};

use intentd_core::IntentType;
use serde::Serialize;
use thiserror::Error;

use crate::config::{BenchmarkConfig, Interface};
use crate::fit::{fit_linear, LinearFit};
use crate::harness::BenchmarkResults;
use crate::stats::{summarize, SummaryStats};

pub const SAMPLES_HEADER: [&str; 7] = ["intent_type", "interface", "workload", "iteration", "elapsed_ms", "installed", "failed"];
pub const SUMMARY_HEADER: [&str; 8] = ["intent_type", "interface", "workload", "n", "mean_ms", "stddev_ms", "ci95_ms", "cov"];
pub const RATIOS_HEADER: [&str; 5] = ["intent_type", "workload", "rest_mean_ms", "cli_mean_ms", "ratio"];
pub const FITS_HEADER: [&str; 5] = ["intent_type", "interface", "slope_ms_per_intent", "intercept_ms", "r_squared"];
pub const SATURATION_HEADER: [&str; 4] = ["intent_type", "run_index", "max_intents", "elapsed_ms"];
pub const SATURATION_SUMMARY_HEADER: [&str; 4] = ["intent_type", "runs", "mean_max_intents", "mean_elapsed_ms"];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("no completed benchmark cell")]
    Empty,
    #[error("cell {intent_type}/{interface}/{workload}: {source}")]
    Stats {
        intent_type: IntentType,
        interface: Interface,
        workload: usize,
        source: crate::stats::InsufficientSamples,
    },
    #[error("cannot write report to {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub intent_type: IntentType,
    pub interface: Interface,
    pub workload: usize,
    pub stats: SummaryStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub intent_type: IntentType,
    pub workload: usize,
    pub rest_mean_ms: f64,
    pub cli_mean_ms: f64,
    /// rest_mean_ms / cli_mean_ms
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub intent_type: IntentType,
    pub interface: Interface,
    pub fit: LinearFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaturationSummary {
    pub intent_type: IntentType,
    pub runs: usize,
    pub mean_max_intents: f64,
    pub mean_elapsed_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub summaries: Vec<CellSummary>,
    pub ratios: Vec<RatioRow>,
    pub fits: Vec<FitRow>,
    pub saturation: Vec<SaturationSummary>,
}

impl Report {
    pub fn summary(&self, intent_type: IntentType, interface: Interface, workload: usize) -> Option<&SummaryStats> {
        self.summaries
            .iter()
            .find(|c| c.intent_type == intent_type && c.interface == interface && c.workload == workload)
            .map(|c| &c.stats)
    }

    /// Mean of the per-cell REST/CLI ratios, if any cell has both.
    pub fn mean_ratio(&self) -> Option<f64> {
        if self.ratios.is_empty() {
            return None;
        }
        Some(self.ratios.iter().map(|r| r.ratio).sum::<f64>() / self.ratios.len() as f64)
    }

    pub fn mean_ratio_for(&self, intent_type: IntentType) -> Option<f64> {
        let rows: Vec<_> = self.ratios.iter().filter(|r| r.intent_type == intent_type).collect();
        if rows.is_empty() {
            return None;
        }
        Some(rows.iter().map(|r| r.ratio).sum::<f64>() / rows.len() as f64)
    }
}

/// Summaries per cell in first-seen order, ratios where both interfaces ran,
/// and one fit per (type, interface) with at least 3 workloads.
pub fn analyze(results: &BenchmarkResults) -> Result<Report, ReportError> {
    if results.samples.is_empty() && results.saturation.is_empty() {
        return Err(ReportError::Empty);
    }
    let mut cells: Vec<(IntentType, Interface, usize)> = Vec::new();
    for s in &results.samples {
        let key = (s.intent_type, s.interface, s.workload);
        if !cells.contains(&key) {
            cells.push(key);
        }
    }

    let mut report = Report::default();
    for &(intent_type, interface, workload) in &cells {
        let values: Vec<f64> = results
            .samples
            .iter()
            .filter(|s| (s.intent_type, s.interface, s.workload) == (intent_type, interface, workload))
            .map(|s| s.elapsed_ms)
            .collect();
        let stats = summarize(&values).map_err(|source| ReportError::Stats {
            intent_type,
            interface,
            workload,
            source,
        })?;
        report.summaries.push(CellSummary {
            intent_type,
            interface,
            workload,
            stats,
        });
    }

    for cell in &report.summaries {
        if cell.interface != Interface::Rest {
            continue;
        }
        if let Some(cli) = report.summary(cell.intent_type, Interface::Cli, cell.workload) {
            report.ratios.push(RatioRow {
                intent_type: cell.intent_type,
                workload: cell.workload,
                rest_mean_ms: cell.stats.mean_ms,
                cli_mean_ms: cli.mean_ms,
                ratio: cell.stats.mean_ms / cli.mean_ms,
            });
        }
    }

    let mut series: Vec<(IntentType, Interface)> = Vec::new();
    for &(t, i, _) in &cells {
        if !series.contains(&(t, i)) {
            series.push((t, i));
        }
    }
    for (intent_type, interface) in series {
        let points: Vec<(f64, f64)> = report
            .summaries
            .iter()
            .filter(|c| c.intent_type == intent_type && c.interface == interface)
            .map(|c| (c.workload as f64, c.stats.mean_ms))
            .collect();
        if let Ok(fit) = fit_linear(&points) {
            report.fits.push(FitRow {
                intent_type,
                interface,
                fit,
            });
        }
    }

    for (intent_type, runs) in &results.saturation {
        let n = runs.len().max(1) as f64;
        report.saturation.push(SaturationSummary {
            intent_type: *intent_type,
            runs: runs.len(),
            mean_max_intents: runs.iter().map(|r| r.max_intents as f64).sum::<f64>() / n,
            mean_elapsed_ms: runs.iter().map(|r| r.elapsed_ms).sum::<f64>() / n,
        });
    }
    Ok(report)
}

#[derive(Serialize)]
struct Metadata<'a> {
    units: &'static str,
    ci_method: &'static str,
    cov: &'static str,
    rest_timing: &'static str,
    cli_timing: &'static str,
    saturation: &'static str,
    reset_mode: crate::config::ResetMode,
    ci_plot_scale: Option<f64>,
    rest_endpoint: &'a str,
    topology: String,
    seed: u64,
    intent_types: Vec<&'static str>,
    interfaces: &'a [Interface],
    workloads: &'a [usize],
    iterations: usize,
    saturation_iterations: usize,
    capacity: usize,
    mean_rest_cli_ratio: Option<f64>,
    files: &'static [&'static str],
}

pub const REPORT_FILES: [&str; 7] = [
    "samples.csv",
    "summary.csv",
    "ratios.csv",
    "fits.csv",
    "saturation.csv",
    "saturation_summary.csv",
    "metadata.json",
];

fn num(x: f64) -> String {
    x.to_string()
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), ReportError> {
    let err = |source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write every report file into `dir` (created if missing) and return
/// their paths.
pub fn emit_report(results: &BenchmarkResults, config: &BenchmarkConfig, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let report = analyze(results)?;
    std::fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = |name: &str| dir.join(name);

    write_csv(
        &path("samples.csv"),
        &SAMPLES_HEADER,
        results.samples.iter().map(|s| {
            vec![
                s.intent_type.to_string(),
                s.interface.to_string(),
                s.workload.to_string(),
                s.iteration.to_string(),
                num(s.elapsed_ms),
                s.installed.to_string(),
                s.failed.to_string(),
            ]
        }),
    )?;

    let mut summary_header = SUMMARY_HEADER.to_vec();
    if config.plot_scale.is_some() {
        summary_header.push("ci_plot_scale");
    }
    write_csv(
        &path("summary.csv"),
        &summary_header,
        report.summaries.iter().map(|c| {
            let mut row = vec![
                c.intent_type.to_string(),
                c.interface.to_string(),
                c.workload.to_string(),
                c.stats.n.to_string(),
                num(c.stats.mean_ms),
                num(c.stats.stddev_ms),
                num(c.stats.ci95_ms),
                num(c.stats.cov),
            ];
            if let Some(scale) = config.plot_scale {
                row.push(num(c.stats.ci95_ms * scale));
            }
            row
        }),
    )?;

    write_csv(
        &path("ratios.csv"),
        &RATIOS_HEADER,
        report.ratios.iter().map(|r| {
            vec![
                r.intent_type.to_string(),
                r.workload.to_string(),
                num(r.rest_mean_ms),
                num(r.cli_mean_ms),
                num(r.ratio),
            ]
        }),
    )?;

    write_csv(
        &path("fits.csv"),
        &FITS_HEADER,
        report.fits.iter().map(|f| {
            vec![
                f.intent_type.to_string(),
                f.interface.to_string(),
                num(f.fit.slope),
                num(f.fit.intercept),
                num(f.fit.r_squared),
            ]
        }),
    )?;

    write_csv(
        &path("saturation.csv"),
        &SATURATION_HEADER,
        results.saturation.iter().flat_map(|(t, runs)| {
            runs.iter().map(move |r| {
                vec![
                    t.to_string(),
                    r.run_index.to_string(),
                    r.max_intents.to_string(),
                    num(r.elapsed_ms),
                ]
            })
        }),
    )?;

    write_csv(
        &path("saturation_summary.csv"),
        &SATURATION_SUMMARY_HEADER,
        report.saturation.iter().map(|s| {
            vec![
                s.intent_type.to_string(),
                s.runs.to_string(),
                num(s.mean_max_intents),
                num(s.mean_elapsed_ms),
            ]
        }),
    )?;

    let metadata = Metadata {
        units: "all times in milliseconds (monotonic clock, fractional)",
        ci_method: "ci95_ms is the half-width t(0.975, n-1) * stddev / sqrt(n), Student t with n-1 degrees of freedom, not z = 1.96",
        cov: "stddev_ms / mean_ms with the sample (n-1) standard deviation",
        rest_timing: "client-side end to end: sequential HTTP POSTs, one intent per request, one reused connection per iteration",
        cli_timing: "in-process around the core submission loop only, excluding argument parsing and output",
        saturation: "submit until the first capacity rejection or failed installation; elapsed_ms covers the installed intents",
        reset_mode: config.reset_mode,
        ci_plot_scale: config.plot_scale,
        rest_endpoint: config.rest_endpoint.as_deref().unwrap_or("embedded"),
        topology: config
            .topology
            .as_ref()
            .map_or_else(|| "bundled chain5".to_string(), |p| p.display().to_string()),
        seed: config.seed,
        intent_types: config.intent_types.iter().map(|t| t.as_str()).collect(),
        interfaces: &config.interfaces,
        workloads: &config.workloads,
        iterations: config.iterations,
        saturation_iterations: config.saturation_iterations,
        capacity: config.capacity,
        mean_rest_cli_ratio: report.mean_ratio(),
        files: &REPORT_FILES,
    };
    let meta_path = path("metadata.json");
    let json = serde_json::to_string_pretty(&metadata).expect("metadata serializes");
    std::fs::write(&meta_path, json + "\n").map_err(|source| ReportError::Io {
        path: meta_path.clone(),
        source,
    })?;

    Ok(REPORT_FILES.iter().map(|f| path(f)).collect())
}
