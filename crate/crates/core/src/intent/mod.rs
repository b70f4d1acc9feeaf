// SPDX-License-Identifier: Apache-2.0

//! Intent framework: connectivity requests, their lifecycle, compilation
//! into flow rules and installation onto the fabric.

mod compile;
mod service;
mod store;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fabric::{FlowRule, TrafficSelector, DEFAULT_PRIORITY};
use crate::ids::{ConnectPoint, IntentId};
use crate::net::Topology;

pub use compile::{
    compile_m2s, compile_p2p, compile_rules, compile_s2m, host_to_host_requests, CompileError,
};
pub use service::{
    Controller, ControllerConfig, Health, IntentError, SubmitError, Submitted, Transition,
    TransitionObserver,
};
pub use store::IntentStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IntentState {
    Submitted,
    Compiling,
    Installing,
    Installed,
    Failed,
    Withdrawn,
}

impl IntentState {
    pub const ALL: [IntentState; 6] = [
        Self::Submitted,
        Self::Compiling,
        Self::Installing,
        Self::Installed,
        Self::Failed,
        Self::Withdrawn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Submitted => "SUBMITTED",
            Self::Compiling => "COMPILING",
            Self::Installing => "INSTALLING",
            Self::Installed => "INSTALLED",
            Self::Failed => "FAILED",
            Self::Withdrawn => "WITHDRAWN",
        }
    }

    pub fn can_transition_to(self, next: IntentState) -> bool {
        use IntentState::*;
        matches!(
            (self, next),
            (Submitted, Compiling)
                | (Compiling, Installing)
                | (Compiling, Failed)
                | (Installing, Installed)
                | (Installing, Failed)
                | (Installed, Withdrawn)
        )
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Self::Failed | Self::Withdrawn)
    }

    /// In flight between submission and a settled state.
    pub fn is_transient(self) -> bool {
        matches!(self, Self::Submitted | Self::Compiling | Self::Installing)
    }
}

impl fmt::Display for IntentState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IntentType {
    PointToPoint,
    SingleToMultiPoint,
    MultiToSinglePoint,
    HostToHost,
}

impl IntentType {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PointToPoint => "PointToPoint",
            Self::SingleToMultiPoint => "SingleToMultiPoint",
            Self::MultiToSinglePoint => "MultiToSinglePoint",
            Self::HostToHost => "HostToHost",
        }
    }
}

impl fmt::Display for IntentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IntentType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "PointToPoint" => Ok(Self::PointToPoint),
            "SingleToMultiPoint" => Ok(Self::SingleToMultiPoint),
            "MultiToSinglePoint" => Ok(Self::MultiToSinglePoint),
            "HostToHost" => Ok(Self::HostToHost),
            other => Err(format!("unknown intent type `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum IntentKind {
    PointToPoint {
        ingress: ConnectPoint,
        egress: ConnectPoint,
    },
    SingleToMultiPoint {
        ingress: ConnectPoint,
        egresses: BTreeSet<ConnectPoint>,
    },
    MultiToSinglePoint {
        ingresses: BTreeSet<ConnectPoint>,
        egress: ConnectPoint,
    },
    HostToHost {
        one: String,
        two: String,
    },
}

impl IntentKind {
    pub fn intent_type(&self) -> IntentType {
        match self {
            Self::PointToPoint { .. } => IntentType::PointToPoint,
            Self::SingleToMultiPoint { .. } => IntentType::SingleToMultiPoint,
            Self::MultiToSinglePoint { .. } => IntentType::MultiToSinglePoint,
            Self::HostToHost { .. } => IntentType::HostToHost,
        }
    }

    /// Points where traffic enters. Empty for host-to-host.
    pub fn ingress_points(&self) -> BTreeSet<ConnectPoint> {
        match self {
            Self::PointToPoint { ingress, .. } | Self::SingleToMultiPoint { ingress, .. } => {
                BTreeSet::from([*ingress])
            }
            Self::MultiToSinglePoint { ingresses, .. } => ingresses.clone(),
            Self::HostToHost { .. } => BTreeSet::new(),
        }
    }

    /// Points where traffic leaves. Empty for host-to-host.
    pub fn egress_points(&self) -> BTreeSet<ConnectPoint> {
        match self {
            Self::PointToPoint { egress, .. } | Self::MultiToSinglePoint { egress, .. } => {
                BTreeSet::from([*egress])
            }
            Self::SingleToMultiPoint { egresses, .. } => egresses.clone(),
            Self::HostToHost { .. } => BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("connect point {0} does not exist")]
    UnknownConnectPoint(ConnectPoint),
    #[error("connect point {0} is an infrastructure port, not an edge port")]
    NotEdgePort(ConnectPoint),
    #[error("ingress and egress are both {0}")]
    SameEndpoints(ConnectPoint),
    #[error("{0} is both an ingress and an egress")]
    EndpointOverlap(ConnectPoint),
    #[error("{0} set is empty")]
    EmptyEndpoints(&'static str),
    #[error("unknown host {0}")]
    UnknownHost(String),
    #[error("host-to-host intent names host {0} twice")]
    SameHost(String),
    #[error("intent selectors may not constrain in_port")]
    SelectorInPort,
}

/// What a caller asks for; becomes an [`Intent`] once submitted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntentRequest {
    pub kind: IntentKind,
    pub selector: TrafficSelector,
    pub priority: u16,
}

impl IntentRequest {
    pub fn new(kind: IntentKind) -> Self {
        Self {
            kind,
            selector: TrafficSelector::default(),
            priority: DEFAULT_PRIORITY,
        }
    }

    pub fn point_to_point(ingress: ConnectPoint, egress: ConnectPoint) -> Self {
        Self::new(IntentKind::PointToPoint { ingress, egress })
    }

    pub fn single_to_multi(ingress: ConnectPoint, egresses: impl IntoIterator<Item = ConnectPoint>) -> Self {
        Self::new(IntentKind::SingleToMultiPoint {
            ingress,
            egresses: egresses.into_iter().collect(),
        })
    }

    pub fn multi_to_single(ingresses: impl IntoIterator<Item = ConnectPoint>, egress: ConnectPoint) -> Self {
        Self::new(IntentKind::MultiToSinglePoint {
            ingresses: ingresses.into_iter().collect(),
            egress,
        })
    }

    pub fn host_to_host(one: impl Into<String>, two: impl Into<String>) -> Self {
        Self::new(IntentKind::HostToHost {
            one: one.into(),
            two: two.into(),
        })
    }

    pub fn with_selector(mut self, selector: TrafficSelector) -> Self {
        self.selector = selector;
        self
    }

    pub fn with_priority(mut self, priority: u16) -> Self {
        self.priority = priority;
        self
    }

    /// Check the request against `topo`. Endpoints must be existing edge
    /// ports; multipoint sets must be non-empty and disjoint from the
    /// single end.
    pub fn validate(&self, topo: &Topology) -> Result<(), ValidationError> {
        if self.selector.in_port.is_some() {
            return Err(ValidationError::SelectorInPort);
        }
        let edge = |cp: ConnectPoint| {
            if !topo.contains_point(cp) {
                Err(ValidationError::UnknownConnectPoint(cp))
            } else if !topo.is_edge_port(cp) {
                Err(ValidationError::NotEdgePort(cp))
            } else {
                Ok(())
            }
        };
        match &self.kind {
            IntentKind::PointToPoint { ingress, egress } => {
                edge(*ingress)?;
                edge(*egress)?;
                if ingress == egress {
                    return Err(ValidationError::SameEndpoints(*ingress));
                }
            }
            IntentKind::SingleToMultiPoint { ingress, egresses } => {
                if egresses.is_empty() {
                    return Err(ValidationError::EmptyEndpoints("egress"));
                }
                edge(*ingress)?;
                egresses.iter().try_for_each(|&cp| edge(cp))?;
                if egresses.contains(ingress) {
                    return Err(ValidationError::EndpointOverlap(*ingress));
                }
            }
            IntentKind::MultiToSinglePoint { ingresses, egress } => {
                if ingresses.is_empty() {
                    return Err(ValidationError::EmptyEndpoints("ingress"));
                }
                ingresses.iter().try_for_each(|&cp| edge(cp))?;
                edge(*egress)?;
                if ingresses.contains(egress) {
                    return Err(ValidationError::EndpointOverlap(*egress));
                }
            }
            IntentKind::HostToHost { one, two } => {
                for host in [one, two] {
                    if topo.host(host).is_none() {
                        return Err(ValidationError::UnknownHost(host.clone()));
                    }
                }
                if one == two {
                    return Err(ValidationError::SameHost(one.clone()));
                }
            }
        }
        Ok(())
    }
}

/// A submitted intent as held by the store.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Intent {
    pub id: IntentId,
    pub kind: IntentKind,
    pub selector: TrafficSelector,
    pub priority: u16,
    pub state: IntentState,
    /// Why the intent failed, when it did.
    pub reason: Option<String>,
    /// Rules installed on its behalf; for host-to-host the sum over its
    /// two point-to-point halves.
    pub rule_count: usize,
    /// Point-to-point intents a host-to-host intent expanded into.
    pub children: Vec<IntentId>,
    pub parent: Option<IntentId>,
}

impl Intent {
    pub fn new(id: IntentId, request: IntentRequest) -> Self {
        Self {
            id,
            kind: request.kind,
            selector: request.selector,
            priority: request.priority,
            state: IntentState::Submitted,
            reason: None,
            rule_count: 0,
            children: Vec::new(),
            parent: None,
        }
    }

    pub fn intent_type(&self) -> IntentType {
        self.kind.intent_type()
    }

    pub fn request(&self) -> IntentRequest {
        IntentRequest {
            kind: self.kind.clone(),
            selector: self.selector.clone(),
            priority: self.priority,
        }
    }
}

/// Compiled form of an intent: the rules that realize it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstallableIntent {
    pub owner: IntentId,
    pub rules: Vec<FlowRule>,
}
