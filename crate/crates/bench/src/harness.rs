// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use intentd_core::intent::ValidationError;
use intentd_core::net::{default_topology, load_topology, TopologyError};
use intentd_core::timing::timed_add;
use intentd_core::{Controller, ControllerConfig, IntentRequest, IntentState, IntentType, Topology};
use intentd_rest::{ClientError, IntentRequestDocument, RestClient, RestServer};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::config::{BenchmarkConfig, ConfigError, Interface, ResetMode};
use crate::saturation::{run_saturation, SaturationResult};
use crate::workload::bench_request;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read topology: {0}")]
    TopologyIo(std::io::Error),
    #[error("embedded REST server: {0}")]
    Server(#[from] std::io::Error),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("topology cannot host a {0} benchmark intent")]
    NoRequest(IntentType),
    #[error("benchmark intent rejected: {0}")]
    Validation(#[from] ValidationError),
    #[error("REST endpoint unreachable: {0}")]
    Unreachable(ClientError),
    #[error("REST request failed: {0}")]
    Rest(ClientError),
    #[error("store capacity {capacity} reached inside a workload of {workload}")]
    CapacityReached { workload: usize, capacity: usize },
    #[error("{transient} intents still in a transient state after a {interface} cell")]
    NotQuiescent { interface: Interface, transient: usize },
    #[error("{interface} target not empty: {live} live intents, {rules} rules")]
    NotEmpty { interface: Interface, live: usize, rules: usize },
}

impl From<ClientError> for HarnessError {
    fn from(err: ClientError) -> Self {
        match err {
            ClientError::Unreachable { .. } => Self::Unreachable(err),
            other => Self::Rest(other),
        }
    }
}

fn ser_type<S: Serializer>(t: &IntentType, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(t.as_str())
}

/// One timed iteration of one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkSample {
    #[serde(serialize_with = "ser_type")]
    pub intent_type: IntentType,
    pub interface: Interface,
    pub workload: usize,
    pub iteration: usize,
    pub elapsed_ms: f64,
    pub installed: usize,
    pub failed: usize,
}

impl BenchmarkSample {
    /// Some intents of the workload ended FAILED.
    pub fn is_degraded(&self) -> bool {
        self.failed > 0
    }
}

#[derive(Debug, Clone, Default)]
pub struct BenchmarkResults {
    pub samples: Vec<BenchmarkSample>,
    pub saturation: Vec<(IntentType, Vec<SaturationResult>)>,
}

/// Drives benchmark cells against an in-process core (CLI path) and a REST
/// server (embedded, hosting that same core, or external).
#[derive(Debug)]
pub struct Harness {
    config: BenchmarkConfig,
    topology: Arc<Topology>,
    core: Arc<Controller>,
    server: Option<RestServer>,
    client: Option<RestClient>,
    requests: BTreeMap<IntentType, IntentRequest>,
}

pub fn load_config_topology(config: &BenchmarkConfig) -> Result<Topology, HarnessError> {
    match &config.topology {
        Some(path) => Ok(load_topology(&std::fs::read_to_string(path).map_err(HarnessError::TopologyIo)?)?),
        None => Ok(default_topology()),
    }
}

impl Harness {
    pub fn new(config: BenchmarkConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let topology = Arc::new(load_config_topology(&config)?);
        let mut requests = BTreeMap::new();
        for &t in &config.intent_types {
            let request = bench_request(&topology, t, config.seed).ok_or(HarnessError::NoRequest(t))?;
            request.validate(&topology)?;
            requests.insert(t, request);
        }
        let core = Arc::new(Self::new_core(&topology, config.capacity));
        let mut harness = Self {
            config,
            topology,
            core,
            server: None,
            client: None,
            requests,
        };
        if harness.config.interfaces.contains(&Interface::Rest) {
            harness.connect()?;
        }
        Ok(harness)
    }

    fn new_core(topology: &Arc<Topology>, capacity: usize) -> Controller {
        Controller::new(
            topology.clone(),
            ControllerConfig {
                intent_capacity: Some(capacity),
                ..Default::default()
            },
        )
    }

    fn connect(&mut self) -> Result<(), HarnessError> {
        let endpoint = match &self.config.rest_endpoint {
            Some(endpoint) => endpoint.clone(),
            None => {
                let server = RestServer::spawn(([127, 0, 0, 1], 0).into(), self.core.clone())?;
                let base = server.base_url();
                self.server = Some(server);
                base
            }
        };
        let client = RestClient::new(&endpoint)?;
        client.health()?;
        self.client = Some(client);
        Ok(())
    }

    pub fn config(&self) -> &BenchmarkConfig {
        &self.config
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    /// The in-process core; the embedded REST server hosts the same one.
    pub fn core(&self) -> &Arc<Controller> {
        &self.core
    }

    pub fn client(&self) -> Option<&RestClient> {
        self.client.as_ref()
    }

    pub fn request(&self, t: IntentType) -> Option<&IntentRequest> {
        self.requests.get(&t)
    }

    fn rest(&self) -> &RestClient {
        self.client.as_ref().expect("REST interface configured")
    }

    fn external(&self, interface: Interface) -> bool {
        interface == Interface::Rest && self.config.rest_endpoint.is_some()
    }

    /// Live intents and installed rules on the target behind `interface`.
    pub fn occupancy(&self, interface: Interface) -> Result<(usize, usize), HarnessError> {
        if self.external(interface) {
            let h = self.rest().health()?;
            Ok((h.intents_live, h.rules_installed))
        } else {
            let h = self.core.health();
            Ok((h.intents_live, h.rules_installed))
        }
    }

    /// Intents caught in SUBMITTED, COMPILING or INSTALLING.
    pub fn transient_count(&self, interface: Interface) -> Result<usize, HarnessError> {
        if self.external(interface) {
            Ok(self.rest().list()?.iter().filter(|i| i.state.is_transient()).count())
        } else {
            Ok(self.core.transient_count())
        }
    }

    fn ensure_empty(&self, interface: Interface) -> Result<(), HarnessError> {
        match self.occupancy(interface)? {
            (0, 0) => Ok(()),
            (live, rules) => Err(HarnessError::NotEmpty { interface, live, rules }),
        }
    }

    /// Clear the target behind `interface` and confirm it is empty.
    pub fn reset(&mut self, interface: Interface) -> Result<(), HarnessError> {
        match (self.config.reset_mode, interface) {
            (ResetMode::Purge, Interface::Cli) => {
                self.core.purge();
            }
            (ResetMode::Purge, Interface::Rest) => self.rest().reset()?,
            (ResetMode::Restart, _) => {
                self.core = Arc::new(Self::new_core(&self.topology, self.config.capacity));
                if let Some(server) = self.server.take() {
                    server.shutdown()?;
                    self.connect()?;
                }
            }
        }
        self.ensure_empty(interface)
    }

    fn timed_rest(&self, request: &IntentRequest, workload: usize) -> Result<(f64, usize, usize), HarnessError> {
        let client = self.rest();
        let doc = IntentRequestDocument::from_request(request);
        let (mut installed, mut failed) = (0, 0);
        let start = Instant::now();
        for _ in 0..workload {
            match client.submit(&doc) {
                Ok(r) if r.state == IntentState::Installed => installed += 1,
                Ok(_) => failed += 1,
                Err(e) if e.status() == Some(409) => {
                    return Err(HarnessError::CapacityReached {
                        workload,
                        capacity: self.config.capacity,
                    })
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok((start.elapsed().as_secs_f64() * 1e3, installed, failed))
    }

    /// One iteration: check the target is empty, time `workload` submissions,
    /// check no intent is left mid-flight, then reset.
    pub fn run_workload(
        &mut self,
        intent_type: IntentType,
        interface: Interface,
        workload: usize,
        iteration: usize,
    ) -> Result<BenchmarkSample, HarnessError> {
        let request = match self.requests.get(&intent_type) {
            Some(r) => r.clone(),
            None => bench_request(&self.topology, intent_type, self.config.seed).ok_or(HarnessError::NoRequest(intent_type))?,
        };
        self.ensure_empty(interface)?;
        let (elapsed_ms, installed, failed) = match interface {
            Interface::Cli => {
                let r = timed_add(&self.core, &request, workload)?;
                if r.capacity_exhausted {
                    return Err(HarnessError::CapacityReached {
                        workload,
                        capacity: self.config.capacity,
                    });
                }
                (r.elapsed_ms, r.installed, r.failed)
            }
            Interface::Rest => self.timed_rest(&request, workload)?,
        };
        let transient = self.transient_count(interface)?;
        if transient > 0 {
            return Err(HarnessError::NotQuiescent { interface, transient });
        }
        self.reset(interface)?;
        let sample = BenchmarkSample {
            intent_type,
            interface,
            workload,
            iteration,
            elapsed_ms,
            installed,
            failed,
        };
        if sample.is_degraded() {
            tracing::warn!(?sample, "degraded sample");
        }
        Ok(sample)
    }

    pub fn run_cell(
        &mut self,
        intent_type: IntentType,
        interface: Interface,
        workload: usize,
    ) -> Result<Vec<BenchmarkSample>, HarnessError> {
        for _ in 0..self.config.warmup_iterations {
            self.run_workload(intent_type, interface, workload, 0)?;
        }
        (0..self.config.iterations)
            .map(|i| self.run_workload(intent_type, interface, workload, i))
            .collect()
    }

    /// Every (type, workload, interface) cell. Within a type, iterations
    /// are interleaved: round `k` runs iteration `k` of every cell, so a
    /// slow stretch of the host spreads over all workloads instead of
    /// shifting one cell's mean. Samples come back grouped by cell.
    pub fn run_sweep(&mut self) -> Result<Vec<BenchmarkSample>, HarnessError> {
        let cells: Vec<(usize, Interface)> = self
            .config
            .workloads
            .iter()
            .flat_map(|&w| self.config.interfaces.iter().map(move |&i| (w, i)))
            .collect();
        let mut samples = Vec::new();
        for t in self.config.intent_types.clone() {
            tracing::info!(intent_type = %t, cells = cells.len(), "sweep");
            for &(w, i) in &cells {
                for _ in 0..self.config.warmup_iterations {
                    self.run_workload(t, i, w, 0)?;
                }
            }
            let mut rounds: Vec<Vec<BenchmarkSample>> = vec![Vec::new(); cells.len()];
            for k in 0..self.config.iterations {
                for (slot, &(w, i)) in rounds.iter_mut().zip(&cells) {
                    slot.push(self.run_workload(t, i, w, k)?);
                }
            }
            samples.extend(rounds.into_iter().flatten());
        }
        Ok(samples)
    }

    /// Saturation runs for every configured type on a dedicated core.
    pub fn run_saturation_all(&self) -> Result<Vec<(IntentType, Vec<SaturationResult>)>, HarnessError> {
        let mut out = Vec::new();
        if self.config.saturation_iterations == 0 {
            return Ok(out);
        }
        for t in &self.config.intent_types {
            let (&t, request) = self.requests.get_key_value(t).expect("request per configured type");
            let core = Self::new_core(&self.topology, self.config.capacity);
            out.push((t, run_saturation(&core, request, self.config.saturation_iterations)?));
        }
        Ok(out)
    }

    pub fn run(&mut self) -> Result<BenchmarkResults, HarnessError> {
        Ok(BenchmarkResults {
            samples: self.run_sweep()?,
            saturation: self.run_saturation_all()?,
        })
    }
}
