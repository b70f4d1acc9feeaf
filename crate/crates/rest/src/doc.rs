// SPDX-License-Identifier: Apache-2.0

//! JSON documents exchanged over the northbound REST interface.

use std::collections::BTreeSet;

use intentd_core::fabric::TrafficSelector;
use intentd_core::intent::Health;
use intentd_core::timing::TimedResult;
use intentd_core::{ConnectPoint, Intent, IntentKind, IntentRequest, IntentState, IntentType, VlanId};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Schema violation in a request body. Maps to HTTP 400.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct DocumentError(pub String);

impl DocumentError {
    fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectorDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eth_src: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eth_dst: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vlan: Option<u32>,
}

impl SelectorDocument {
    pub fn from_selector(selector: &TrafficSelector) -> Option<Self> {
        if selector.eth_src.is_none() && selector.eth_dst.is_none() && selector.vlan.is_none() {
            return None;
        }
        Some(Self {
            eth_src: selector.eth_src.map(|m| m.to_string()),
            eth_dst: selector.eth_dst.map(|m| m.to_string()),
            vlan: selector.vlan.map(|v| v.get() as u32),
        })
    }

    fn to_selector(&self) -> Result<TrafficSelector, DocumentError> {
        let mac = |field: &str, value: &Option<String>| {
            value
                .as_deref()
                .map(|s| s.parse().map_err(|_| DocumentError(format!("selector.{field}: invalid MAC `{s}`"))))
                .transpose()
        };
        Ok(TrafficSelector {
            in_port: None,
            eth_src: mac("eth_src", &self.eth_src)?,
            eth_dst: mac("eth_dst", &self.eth_dst)?,
            vlan: self
                .vlan
                .map(VlanId::new)
                .transpose()
                .map_err(|e| DocumentError(format!("selector.vlan: {e}")))?,
        })
    }
}

/// Body of `POST /intents`. Which endpoint fields are required depends on
/// `type`; any other endpoint field is rejected.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntentRequestDocument {
    #[serde(rename = "type")]
    pub intent_type: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingress: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub egress: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingresses: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub egresses: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priority: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selector: Option<SelectorDocument>,
}

fn point(field: &str, value: &str) -> Result<ConnectPoint, DocumentError> {
    value
        .parse()
        .map_err(|e| DocumentError(format!("{field}: {e}")))
}

fn point_set(field: &str, values: &[String]) -> Result<BTreeSet<ConnectPoint>, DocumentError> {
    if values.is_empty() {
        return Err(DocumentError(format!("{field} must not be empty")));
    }
    let mut set = BTreeSet::new();
    for value in values {
        if !set.insert(point(field, value)?) {
            return Err(DocumentError(format!("{field}: duplicate connect point {value}")));
        }
    }
    Ok(set)
}

impl IntentRequestDocument {
    pub fn from_request(request: &IntentRequest) -> Self {
        let strings = |set: &BTreeSet<ConnectPoint>| Some(set.iter().map(ToString::to_string).collect());
        let mut doc = Self {
            intent_type: request.kind.intent_type().to_string(),
            priority: Some(request.priority as i64),
            selector: SelectorDocument::from_selector(&request.selector),
            ..Default::default()
        };
        match &request.kind {
            IntentKind::PointToPoint { ingress, egress } => {
                doc.ingress = Some(ingress.to_string());
                doc.egress = Some(egress.to_string());
            }
            IntentKind::SingleToMultiPoint { ingress, egresses } => {
                doc.ingress = Some(ingress.to_string());
                doc.egresses = strings(egresses);
            }
            IntentKind::MultiToSinglePoint { ingresses, egress } => {
                doc.ingresses = strings(ingresses);
                doc.egress = Some(egress.to_string());
            }
            IntentKind::HostToHost { one, two } => {
                doc.one = Some(one.clone());
                doc.two = Some(two.clone());
            }
        }
        doc
    }

    /// Schema check and conversion. Topology-level validation happens on
    /// submission.
    pub fn to_request(&self) -> Result<IntentRequest, DocumentError> {
        let intent_type: IntentType = self.intent_type.parse().map_err(DocumentError)?;
        let present = [
            ("ingress", self.ingress.is_some()),
            ("egress", self.egress.is_some()),
            ("ingresses", self.ingresses.is_some()),
            ("egresses", self.egresses.is_some()),
            ("one", self.one.is_some()),
            ("two", self.two.is_some()),
        ];
        let required: &[&str] = match intent_type {
            IntentType::PointToPoint => &["ingress", "egress"],
            IntentType::SingleToMultiPoint => &["ingress", "egresses"],
            IntentType::MultiToSinglePoint => &["ingresses", "egress"],
            IntentType::HostToHost => &["one", "two"],
        };
        for (field, is_present) in present {
            match (required.contains(&field), is_present) {
                (true, false) => return Err(DocumentError(format!("{intent_type} requires `{field}`"))),
                (false, true) => return Err(DocumentError(format!("`{field}` is not allowed for {intent_type}"))),
                _ => {}
            }
        }

        let kind = match intent_type {
            IntentType::PointToPoint => IntentKind::PointToPoint {
                ingress: point("ingress", self.ingress.as_ref().unwrap())?,
                egress: point("egress", self.egress.as_ref().unwrap())?,
            },
            IntentType::SingleToMultiPoint => IntentKind::SingleToMultiPoint {
                ingress: point("ingress", self.ingress.as_ref().unwrap())?,
                egresses: point_set("egresses", self.egresses.as_ref().unwrap())?,
            },
            IntentType::MultiToSinglePoint => IntentKind::MultiToSinglePoint {
                ingresses: point_set("ingresses", self.ingresses.as_ref().unwrap())?,
                egress: point("egress", self.egress.as_ref().unwrap())?,
            },
            IntentType::HostToHost => IntentKind::HostToHost {
                one: self.one.clone().unwrap(),
                two: self.two.clone().unwrap(),
            },
        };
        let mut request = IntentRequest::new(kind);
        if let Some(priority) = self.priority {
            request.priority = u16::try_from(priority)
                .map_err(|_| DocumentError::new(format!("priority {priority} out of range 0..=65535")))?;
        }
        if let Some(selector) = &self.selector {
            request.selector = selector.to_selector()?;
        }
        Ok(request)
    }
}

/// Body of `POST /intents/batch`: a request document plus `count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchRequestDocument {
    pub request: IntentRequestDocument,
    pub count: u64,
}

impl BatchRequestDocument {
    pub fn to_json(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(&self.request).expect("documents serialize");
        value["count"] = self.count.into();
        value
    }

    pub fn from_json(body: &[u8]) -> Result<Self, DocumentError> {
        let mut value: serde_json::Value =
            serde_json::from_slice(body).map_err(|e| DocumentError(format!("malformed JSON: {e}")))?;
        let object = value
            .as_object_mut()
            .ok_or_else(|| DocumentError::new("body must be a JSON object"))?;
        let count = object
            .remove("count")
            .ok_or_else(|| DocumentError::new("batch requires `count`"))?;
        let count = count
            .as_u64()
            .filter(|&c| c >= 1)
            .ok_or_else(|| DocumentError::new("`count` must be a positive integer"))?;
        let request = serde_json::from_value(value).map_err(|e| DocumentError(e.to_string()))?;
        Ok(Self { request, count })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentResponseDocument {
    pub id: String,
    pub state: IntentState,
    #[serde(rename = "type")]
    pub intent_type: IntentType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingress: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub egress: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingresses: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub egresses: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub one: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub two: Option<String>,
    pub priority: u16,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selector: Option<SelectorDocument>,
    pub rule_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

impl From<&Intent> for IntentResponseDocument {
    fn from(intent: &Intent) -> Self {
        let endpoints = IntentRequestDocument::from_request(&intent.request());
        Self {
            id: intent.id.to_string(),
            state: intent.state,
            intent_type: intent.intent_type(),
            ingress: endpoints.ingress,
            egress: endpoints.egress,
            ingresses: endpoints.ingresses,
            egresses: endpoints.egresses,
            one: endpoints.one,
            two: endpoints.two,
            priority: intent.priority,
            selector: endpoints.selector,
            rule_count: intent.rule_count,
            reason: intent.reason.clone(),
            children: intent.children.iter().map(ToString::to_string).collect(),
            parent: intent.parent.map(|p| p.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthDocument {
    pub intents_live: usize,
    pub rules_installed: usize,
}

impl From<Health> for HealthDocument {
    fn from(h: Health) -> Self {
        Self {
            intents_live: h.intents_live,
            rules_installed: h.rules_installed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResultDocument {
    pub submitted: usize,
    pub installed: usize,
    pub failed: usize,
    pub elapsed_ms: f64,
    pub capacity_exhausted: bool,
}

impl From<TimedResult> for BatchResultDocument {
    fn from(r: TimedResult) -> Self {
        Self {
            submitted: r.submitted,
            installed: r.installed,
            failed: r.failed,
            elapsed_ms: r.elapsed_ms,
            capacity_exhausted: r.capacity_exhausted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorDocument {
    pub error: String,
}
