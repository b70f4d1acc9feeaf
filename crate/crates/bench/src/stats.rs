// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("need at least 2 samples, got {0}")]
pub struct InsufficientSamples(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean_ms: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub stddev_ms: f64,
    /// Half-width of the two-sided 95% confidence interval of the mean.
    pub ci95_ms: f64,
    /// stddev / mean; 0 when the mean is 0.
    pub cov: f64,
}

/// t_{0.975, df}
pub fn t_975(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df as f64)
        .expect("df >= 1")
        .inverse_cdf(0.975)
}

pub fn summarize(samples: &[f64]) -> Result<SummaryStats, InsufficientSamples> {
    let n = samples.len();
    if n < 2 {
        return Err(InsufficientSamples(n));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let ss: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum();
    let stddev = (ss / (nf - 1.0)).sqrt();
    let ci95 = t_975(n - 1) * stddev / nf.sqrt();
    let cov = if mean == 0.0 { 0.0 } else { stddev / mean.abs() };
    Ok(SummaryStats {
        n,
        mean_ms: mean,
        stddev_ms: stddev,
        ci95_ms: ci95,
        cov,
    })
}
