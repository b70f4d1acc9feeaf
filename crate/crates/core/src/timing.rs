// SPDX-License-Identifier: Apache-2.0

//! Core-side timekeeping for repeated intent installation.

use std::time::Instant;

use serde::Serialize;

use crate::intent::{Controller, IntentRequest, IntentState, SubmitError, ValidationError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimedResult {
    pub submitted: usize,
    pub installed: usize,
    pub failed: usize,
    pub elapsed_ms: f64,
    /// The loop stopped early because the store was full.
    pub capacity_exhausted: bool,
}

/// Submit `count` copies of `request` back to back and time the loop.
///
/// The request is validated before the clock starts; only the submissions
/// themselves are timed. Submission stops at the first capacity rejection.
pub fn timed_add(controller: &Controller, request: &IntentRequest, count: usize) -> Result<TimedResult, ValidationError> {
    request.validate(controller.topology())?;

    let mut result = TimedResult {
        submitted: 0,
        installed: 0,
        failed: 0,
        elapsed_ms: 0.0,
        capacity_exhausted: false,
    };
    let start = Instant::now();
    for _ in 0..count {
        match controller.submit(request.clone()) {
            Ok(s) => {
                result.submitted += 1;
                if s.state == IntentState::Installed {
                    result.installed += 1;
                } else {
                    result.failed += 1;
                }
            }
            Err(SubmitError::Capacity { .. }) => {
                result.capacity_exhausted = true;
                break;
            }
            Err(SubmitError::Validation(err)) => return Err(err),
        }
    }
    result.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(result)
}
