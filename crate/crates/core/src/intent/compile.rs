// SPDX-License-Identifier: Apache-2.0

//! Intent compilers. Every compiler enriches the intent selector with the
//! arrival port at each device, so rules of different intents sharing a
//! device never collide.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use thiserror::Error;

use super::{Intent, IntentKind, IntentRequest, ValidationError};
use crate::fabric::{FlowRule, RuleIdGen, TrafficSelector, TrafficTreatment};
use crate::ids::{ConnectPoint, DeviceId};
use crate::net::{shortest_path, Path, PathError, Topology};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("no path from {src} to {dst}")]
    NoPath { src: DeviceId, dst: DeviceId },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error("{0} intents are not compiled into rules directly")]
    WrongVariant(&'static str),
    #[error("paths toward the egress set disagree on the arrival port at {0}")]
    InconsistentTree(DeviceId),
}

impl From<PathError> for CompileError {
    fn from(err: PathError) -> Self {
        match err {
            PathError::NoPath { src, dst } => Self::NoPath { src, dst },
            // endpoints are validated first, so this only fires on misuse
            PathError::UnknownDevice(d) => Self::NoPath { src: d, dst: d },
        }
    }
}

struct RuleFactory<'a> {
    intent: &'a Intent,
    ids: &'a RuleIdGen,
}

impl RuleFactory<'_> {
    fn rule(&self, device: DeviceId, in_port: u32, outputs: Vec<u32>) -> FlowRule {
        FlowRule {
            id: self.ids.next(),
            device,
            priority: self.intent.priority,
            selector: self.intent.selector.with_in_port(in_port),
            treatment: TrafficTreatment::outputs(outputs),
            owner: self.intent.id,
        }
    }
}

/// (device, arrival port, output port) for every device on `path`, ending
/// with the egress port.
fn hops(path: &Path, ingress: ConnectPoint, egress: ConnectPoint) -> Vec<(DeviceId, u32, u32)> {
    let mut out = Vec::with_capacity(path.len() + 1);
    let mut in_port = ingress.port;
    for link in path.links() {
        out.push((link.src.device, in_port, link.src.port));
        in_port = link.dst.port;
    }
    out.push((egress.device, in_port, egress.port));
    out
}

/// One rule per device along the shortest path from ingress to egress.
pub fn compile_p2p(topo: &Topology, intent: &Intent, ids: &RuleIdGen) -> Result<Vec<FlowRule>, CompileError> {
    let IntentKind::PointToPoint { ingress, egress } = intent.kind else {
        return Err(CompileError::WrongVariant(intent.intent_type().as_str()));
    };
    intent.request().validate(topo)?;
    let path = shortest_path(topo, ingress.device, egress.device)?;
    let factory = RuleFactory { intent, ids };
    Ok(hops(&path, ingress, egress)
        .into_iter()
        .map(|(device, in_port, out)| factory.rule(device, in_port, vec![out]))
        .collect())
}

/// Union of the per-ingress shortest paths toward the egress, one rule per
/// (device, arrival port). Once a path reaches a pair another ingress
/// already covers, the remainder is shared.
pub fn compile_m2s(topo: &Topology, intent: &Intent, ids: &RuleIdGen) -> Result<Vec<FlowRule>, CompileError> {
    let IntentKind::MultiToSinglePoint { ingresses, egress } = &intent.kind else {
        return Err(CompileError::WrongVariant(intent.intent_type().as_str()));
    };
    intent.request().validate(topo)?;
    let paths = ingresses
        .iter()
        .map(|&ingress| Ok((ingress, shortest_path(topo, ingress.device, egress.device)?)))
        .collect::<Result<Vec<_>, CompileError>>()?;

    let factory = RuleFactory { intent, ids };
    let mut covered = HashSet::new();
    let mut rules = Vec::new();
    for (ingress, path) in &paths {
        for (device, in_port, out) in hops(path, *ingress, *egress) {
            if !covered.insert((device, in_port)) {
                break;
            }
            rules.push(factory.rule(device, in_port, vec![out]));
        }
    }
    Ok(rules)
}

/// Tree formed by the shortest paths from the ingress to every egress
/// device; each tree device gets one rule listing all its outputs.
pub fn compile_s2m(topo: &Topology, intent: &Intent, ids: &RuleIdGen) -> Result<Vec<FlowRule>, CompileError> {
    let IntentKind::SingleToMultiPoint { ingress, egresses } = &intent.kind else {
        return Err(CompileError::WrongVariant(intent.intent_type().as_str()));
    };
    intent.request().validate(topo)?;

    let mut tree: BTreeMap<DeviceId, (u32, BTreeSet<u32>)> = BTreeMap::new();
    let mut attach = |device: DeviceId, in_port: u32, out: u32| -> Result<(), CompileError> {
        let (arrival, outputs) = tree.entry(device).or_insert_with(|| (in_port, BTreeSet::new()));
        if *arrival != in_port {
            return Err(CompileError::InconsistentTree(device));
        }
        outputs.insert(out);
        Ok(())
    };
    for egress in egresses {
        let path = shortest_path(topo, ingress.device, egress.device)?;
        for (device, in_port, out) in hops(&path, *ingress, *egress) {
            attach(device, in_port, out)?;
        }
    }

    let factory = RuleFactory { intent, ids };
    Ok(tree
        .into_iter()
        .map(|(device, (in_port, outputs))| factory.rule(device, in_port, outputs.into_iter().collect()))
        .collect())
}

/// Compile any rule-bearing intent.
pub fn compile_rules(topo: &Topology, intent: &Intent, ids: &RuleIdGen) -> Result<Vec<FlowRule>, CompileError> {
    match intent.kind {
        IntentKind::PointToPoint { .. } => compile_p2p(topo, intent, ids),
        IntentKind::SingleToMultiPoint { .. } => compile_s2m(topo, intent, ids),
        IntentKind::MultiToSinglePoint { .. } => compile_m2s(topo, intent, ids),
        IntentKind::HostToHost { .. } => Err(CompileError::WrongVariant("HostToHost")),
    }
}

/// The two point-to-point requests a host-to-host intent expands into:
/// `one -> two` then `two -> one`, each constrained to the hosts' MACs.
pub fn host_to_host_requests(topo: &Topology, request: &IntentRequest) -> Result<[IntentRequest; 2], CompileError> {
    let IntentKind::HostToHost { one, two } = &request.kind else {
        return Err(CompileError::WrongVariant(request.kind.intent_type().as_str()));
    };
    request.validate(topo)?;
    let (a, b) = (topo.host(one).unwrap(), topo.host(two).unwrap());
    let directed = |from: &crate::net::Host, to: &crate::net::Host| IntentRequest {
        kind: IntentKind::PointToPoint {
            ingress: from.attach,
            egress: to.attach,
        },
        selector: TrafficSelector {
            eth_src: Some(from.mac),
            eth_dst: Some(to.mac),
            ..request.selector.clone()
        },
        priority: request.priority,
    };
    Ok([directed(a, b), directed(b, a)])
}
