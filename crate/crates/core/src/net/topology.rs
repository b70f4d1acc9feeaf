// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{ConnectPoint, DeviceId, MacAddr};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("malformed topology document: {0}")]
    Parse(String),
    #[error("duplicate device {0}")]
    DuplicateDevice(DeviceId),
    #[error("device {0} declares port {1} twice")]
    DuplicatePort(DeviceId, u32),
    #[error("device {0} declares invalid port 0")]
    ZeroPort(DeviceId),
    #[error("{context} references unknown device {device}")]
    UnknownDevice { context: String, device: DeviceId },
    #[error("{context} references unknown port {point}")]
    UnknownPort { context: String, point: ConnectPoint },
    #[error("port {0} is used by more than one link")]
    PortInUse(ConnectPoint),
    #[error("link {0} -> {1} connects a device to itself")]
    SelfLink(ConnectPoint, ConnectPoint),
    #[error("link {0} -> {1} has non-positive or non-finite weight {2}")]
    InvalidWeight(ConnectPoint, ConnectPoint, f64),
    #[error("duplicate host {0}")]
    DuplicateHost(String),
    #[error("host {host} attaches to infrastructure port {point}")]
    HostOnLinkPort { host: String, point: ConnectPoint },
}

/// A directed link. Every declared link is stored together with its reverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub src: ConnectPoint,
    pub dst: ConnectPoint,
    pub weight: f64,
}

impl Link {
    pub fn reversed(&self) -> Self {
        Self {
            src: self.dst,
            dst: self.src,
            weight: self.weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Host {
    pub id: String,
    pub mac: MacAddr,
    pub attach: ConnectPoint,
}

/// Immutable view of the fabric: devices with their ports, bidirectional
/// links and attached hosts.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    devices: BTreeMap<DeviceId, BTreeSet<u32>>,
    /// Sorted by source connect point.
    links: Vec<Link>,
    link_by_src: HashMap<ConnectPoint, usize>,
    adjacency: BTreeMap<DeviceId, Vec<usize>>,
    hosts: BTreeMap<String, Host>,
}

impl Topology {
    pub fn builder() -> TopologyBuilder {
        TopologyBuilder::default()
    }

    pub fn device_count(&self) -> usize {
        self.devices.len()
    }

    pub fn devices(&self) -> impl Iterator<Item = DeviceId> + '_ {
        self.devices.keys().copied()
    }

    pub fn contains_device(&self, device: DeviceId) -> bool {
        self.devices.contains_key(&device)
    }

    pub fn ports(&self, device: DeviceId) -> Option<&BTreeSet<u32>> {
        self.devices.get(&device)
    }

    pub fn contains_point(&self, point: ConnectPoint) -> bool {
        self.devices
            .get(&point.device)
            .is_some_and(|ports| ports.contains(&point.port))
    }

    /// All directed links, each declared link appearing in both directions.
    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// The link leaving the fabric through `point`, if it is an
    /// infrastructure port.
    pub fn link_from(&self, point: ConnectPoint) -> Option<&Link> {
        self.link_by_src.get(&point).map(|&i| &self.links[i])
    }

    /// Links leaving `device`, ordered by source port.
    pub fn links_from(&self, device: DeviceId) -> impl Iterator<Item = &Link> + '_ {
        self.adjacency
            .get(&device)
            .into_iter()
            .flatten()
            .map(|&i| &self.links[i])
    }

    pub fn is_edge_port(&self, point: ConnectPoint) -> bool {
        self.contains_point(point) && !self.link_by_src.contains_key(&point)
    }

    /// Every port that is not a link endpoint, in ascending order.
    pub fn edge_ports(&self) -> Vec<ConnectPoint> {
        self.devices
            .iter()
            .flat_map(|(&device, ports)| ports.iter().map(move |&port| ConnectPoint::new(device, port)))
            .filter(|cp| !self.link_by_src.contains_key(cp))
            .collect()
    }

    pub fn hosts(&self) -> impl Iterator<Item = &Host> + '_ {
        self.hosts.values()
    }

    pub fn host(&self, id: &str) -> Option<&Host> {
        self.hosts.get(id)
    }

    /// Parse and validate a topology file.
    pub fn from_json(document: &str) -> Result<Self, TopologyError> {
        let doc: TopologyDocument =
            serde_json::from_str(document).map_err(|e| TopologyError::Parse(e.to_string()))?;
        Self::from_document(doc)
    }

    pub fn from_document(doc: TopologyDocument) -> Result<Self, TopologyError> {
        let mut builder = Topology::builder();
        for d in doc.devices {
            builder = builder.device(d.id, d.ports);
        }
        for l in doc.links {
            builder = builder.weighted_link(l.src, l.dst, l.weight.unwrap_or(1.0));
        }
        for (i, h) in doc.hosts.into_iter().enumerate() {
            let mac = h.mac.unwrap_or_else(|| default_host_mac(&h.id, i));
            builder = builder.host_with_mac(h.id, h.attach, mac);
        }
        builder.build()
    }

    /// Canonical document: devices, ports and hosts sorted, each physical
    /// link listed once from its lower endpoint, weights only when not 1.
    pub fn to_document(&self) -> TopologyDocument {
        TopologyDocument {
            devices: self
                .devices
                .iter()
                .map(|(&id, ports)| DeviceDocument {
                    id,
                    ports: ports.iter().copied().collect(),
                })
                .collect(),
            links: self
                .links
                .iter()
                .filter(|l| l.src < l.dst)
                .map(|l| LinkDocument {
                    src: l.src,
                    dst: l.dst,
                    weight: (l.weight != 1.0).then_some(l.weight),
                })
                .collect(),
            hosts: self
                .hosts
                .values()
                .map(|h| HostDocument {
                    id: h.id.clone(),
                    attach: h.attach,
                    mac: Some(h.mac),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("topology documents always serialize")
    }
}

/// Hosts whose id is itself a MAC address keep it; others get a locally
/// administered address derived from their position in the file.
fn default_host_mac(id: &str, index: usize) -> MacAddr {
    id.parse()
        .unwrap_or_else(|_| MacAddr::local(index as u32 + 1))
}

/// Load the topology file format.
pub fn load_topology(document: &str) -> Result<Topology, TopologyError> {
    Topology::from_json(document)
}

/// Five-device chain with two hosts at its ends; the default fabric when no
/// topology file is supplied.
pub fn default_topology() -> Topology {
    Topology::from_json(include_str!("../../topologies/chain5.json"))
        .expect("bundled topology is valid")
}

#[derive(Debug, Default)]
pub struct TopologyBuilder {
    devices: Vec<(DeviceId, Vec<u32>)>,
    links: Vec<Link>,
    hosts: Vec<(String, ConnectPoint, Option<MacAddr>)>,
}

impl TopologyBuilder {
    pub fn device(mut self, id: DeviceId, ports: impl IntoIterator<Item = u32>) -> Self {
        self.devices.push((id, ports.into_iter().collect()));
        self
    }

    pub fn link(self, src: ConnectPoint, dst: ConnectPoint) -> Self {
        self.weighted_link(src, dst, 1.0)
    }

    pub fn weighted_link(mut self, src: ConnectPoint, dst: ConnectPoint, weight: f64) -> Self {
        self.links.push(Link { src, dst, weight });
        self
    }

    pub fn host(mut self, id: impl Into<String>, attach: ConnectPoint) -> Self {
        self.hosts.push((id.into(), attach, None));
        self
    }

    pub fn host_with_mac(mut self, id: impl Into<String>, attach: ConnectPoint, mac: MacAddr) -> Self {
        self.hosts.push((id.into(), attach, Some(mac)));
        self
    }

    pub fn build(self) -> Result<Topology, TopologyError> {
        let mut devices = BTreeMap::new();
        for (id, ports) in self.devices {
            let mut set = BTreeSet::new();
            for port in ports {
                if port == 0 {
                    return Err(TopologyError::ZeroPort(id));
                }
                if !set.insert(port) {
                    return Err(TopologyError::DuplicatePort(id, port));
                }
            }
            if devices.insert(id, set).is_some() {
                return Err(TopologyError::DuplicateDevice(id));
            }
        }

        let check_point = |context: String, point: ConnectPoint| -> Result<(), TopologyError> {
            match devices.get(&point.device) {
                None => Err(TopologyError::UnknownDevice {
                    context,
                    device: point.device,
                }),
                Some(ports) if !ports.contains(&point.port) => {
                    Err(TopologyError::UnknownPort { context, point })
                }
                Some(_) => Ok(()),
            }
        };

        let mut links = Vec::with_capacity(self.links.len() * 2);
        let mut used = BTreeSet::new();
        for link in self.links {
            let context = format!("link {} -> {}", link.src, link.dst);
            check_point(context.clone(), link.src)?;
            check_point(context, link.dst)?;
            if link.src.device == link.dst.device {
                return Err(TopologyError::SelfLink(link.src, link.dst));
            }
            if !(link.weight.is_finite() && link.weight > 0.0) {
                return Err(TopologyError::InvalidWeight(link.src, link.dst, link.weight));
            }
            for end in [link.src, link.dst] {
                if !used.insert(end) {
                    return Err(TopologyError::PortInUse(end));
                }
            }
            links.push(link);
            links.push(link.reversed());
        }
        links.sort_by_key(|l| l.src);

        let link_by_src = links.iter().enumerate().map(|(i, l)| (l.src, i)).collect();
        let mut adjacency: BTreeMap<DeviceId, Vec<usize>> = BTreeMap::new();
        for (i, l) in links.iter().enumerate() {
            adjacency.entry(l.src.device).or_default().push(i);
        }

        let mut hosts = BTreeMap::new();
        for (i, (id, attach, mac)) in self.hosts.into_iter().enumerate() {
            check_point(format!("host {id}"), attach)?;
            if used.contains(&attach) {
                return Err(TopologyError::HostOnLinkPort { host: id, point: attach });
            }
            let mac = mac.unwrap_or_else(|| default_host_mac(&id, i));
            if hosts.contains_key(&id) {
                return Err(TopologyError::DuplicateHost(id));
            }
            hosts.insert(id.clone(), Host { id, mac, attach });
        }

        Ok(Topology {
            devices,
            links,
            link_by_src,
            adjacency,
            hosts,
        })
    }
}

// On-disk format.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyDocument {
    pub devices: Vec<DeviceDocument>,
    #[serde(default)]
    pub links: Vec<LinkDocument>,
    #[serde(default)]
    pub hosts: Vec<HostDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceDocument {
    pub id: DeviceId,
    pub ports: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDocument {
    pub src: ConnectPoint,
    pub dst: ConnectPoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HostDocument {
    pub id: String,
    pub attach: ConnectPoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mac: Option<MacAddr>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(n: u64) -> DeviceId {
        DeviceId::new(n)
    }

    fn cp(n: u64, port: u32) -> ConnectPoint {
        ConnectPoint::new(d(n), port)
    }

    #[test]
    fn smallest_topology() {
        let topo = load_topology(r#"{"devices":[{"id":"of:0000000000000001","ports":[1,2]}],"links":[],"hosts":[]}"#)
            .unwrap();
        assert_eq!(topo.device_count(), 1);
        assert!(topo.links().is_empty());
        assert_eq!(topo.edge_ports(), vec![cp(1, 1), cp(1, 2)]);
    }

    #[test]
    fn chain_expands_links_both_ways() {
        let topo = load_topology(
            r#"{
                "devices": [
                    {"id": "of:0000000000000001", "ports": [1, 2]},
                    {"id": "of:0000000000000002", "ports": [1, 2]},
                    {"id": "of:0000000000000003", "ports": [1, 2]}
                ],
                "links": [
                    {"src": "of:0000000000000001/2", "dst": "of:0000000000000002/1"},
                    {"src": "of:0000000000000002/2", "dst": "of:0000000000000003/1"}
                ]
            }"#,
        )
        .unwrap();
        assert_eq!(topo.device_count(), 3);
        assert_eq!(topo.links().len(), 4);
        assert_eq!(topo.link_from(cp(2, 1)).unwrap().dst, cp(1, 2));
        assert!(topo.is_edge_port(cp(1, 1)));
        assert!(!topo.is_edge_port(cp(2, 2)));
    }

    #[test]
    fn dangling_link_names_missing_device() {
        let err = load_topology(
            r#"{"devices":[{"id":"of:0000000000000001","ports":[1]}],
                "links":[{"src":"of:0000000000000001/1","dst":"of:0000000000000009/1"}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, TopologyError::UnknownDevice { device, .. } if device == d(9)));
        assert!(err.to_string().contains("of:0000000000000009"));
    }

    #[test]
    fn validation_errors() {
        let base = || Topology::builder().device(d(1), [1, 2]).device(d(2), [1, 2]);

        assert_eq!(
            base().device(d(1), [3]).build().unwrap_err(),
            TopologyError::DuplicateDevice(d(1))
        );
        assert_eq!(
            base().link(cp(1, 1), cp(2, 1)).link(cp(1, 1), cp(2, 2)).build().unwrap_err(),
            TopologyError::PortInUse(cp(1, 1))
        );
        assert!(matches!(
            base().link(cp(1, 1), cp(2, 7)).build().unwrap_err(),
            TopologyError::UnknownPort { point, .. } if point == cp(2, 7)
        ));
        assert!(matches!(
            base().link(cp(1, 1), cp(1, 2)).build().unwrap_err(),
            TopologyError::SelfLink(..)
        ));
        assert!(matches!(
            base().weighted_link(cp(1, 1), cp(2, 1), 0.0).build().unwrap_err(),
            TopologyError::InvalidWeight(..)
        ));
        assert!(matches!(
            base().link(cp(1, 1), cp(2, 1)).host("h", cp(1, 1)).build().unwrap_err(),
            TopologyError::HostOnLinkPort { .. }
        ));
        assert_eq!(
            base().host("h", cp(1, 1)).host("h", cp(2, 1)).build().unwrap_err(),
            TopologyError::DuplicateHost("h".into())
        );
        assert!(matches!(
            load_topology("{\"devices\": 3}").unwrap_err(),
            TopologyError::Parse(_)
        ));
    }

    #[test]
    fn bundled_topology_is_a_five_device_chain() {
        let topo = default_topology();
        assert_eq!(topo.device_count(), 5);
        assert_eq!(topo.links().len(), 8);
        assert_eq!(topo.hosts().count(), 2);
    }

    #[test]
    fn canonical_document_round_trips() {
        let topo = Topology::builder()
            .device(d(2), [3, 1, 2])
            .device(d(1), [1, 2])
            .weighted_link(cp(2, 1), cp(1, 2), 2.5)
            .host("h1", cp(1, 1))
            .build()
            .unwrap();
        let json = topo.to_json();
        let again = load_topology(&json).unwrap();
        assert_eq!(again, topo);
        assert_eq!(again.to_json(), json);
    }
}
