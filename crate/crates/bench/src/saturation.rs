// SPDX-License-Identifier: Apache-2.0

//! Submit until the controller stops accepting intents.

use std::time::Instant;

use intentd_core::intent::{SubmitError, ValidationError};
use intentd_core::{Controller, IntentRequest, IntentState};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaturationResult {
    pub run_index: usize,
    /// Intents installed before the first capacity rejection or failure.
    pub max_intents: usize,
    /// Time to install those intents.
    pub elapsed_ms: f64,
}

/// One saturation run on an empty controller. The controller must have a
/// finite capacity or a request that eventually fails.
pub fn saturate(controller: &Controller, request: &IntentRequest) -> Result<(usize, f64), ValidationError> {
    request.validate(controller.topology())?;
    let mut installed = 0;
    let start = Instant::now();
    loop {
        match controller.submit(request.clone()) {
            Ok(s) if s.state == IntentState::Installed => installed += 1,
            Ok(_) | Err(SubmitError::Capacity { .. }) => break,
            Err(SubmitError::Validation(e)) => return Err(e),
        }
    }
    Ok((installed, start.elapsed().as_secs_f64() * 1e3))
}

/// `runs` saturation runs, purging the controller before each.
pub fn run_saturation(
    controller: &Controller,
    request: &IntentRequest,
    runs: usize,
) -> Result<Vec<SaturationResult>, ValidationError> {
    assert!(controller.capacity().is_some(), "saturation needs a finite capacity");
    (0..runs)
        .map(|run_index| {
            controller.purge();
            let (max_intents, elapsed_ms) = saturate(controller, request)?;
            Ok(SaturationResult {
                run_index,
                max_intents,
                elapsed_ms,
            })
        })
        .collect()
}
