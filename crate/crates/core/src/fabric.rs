// SPDX-License-Identifier: Apache-2.0

//! In-process switch fabric: one priority-ordered flow table per device,
//! atomic batch installation, and a packet walk that follows installed rules
//! across links.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{ConnectPoint, DeviceId, IntentId, MacAddr, RuleId, VlanId};
use crate::net::Topology;

pub const DEFAULT_PRIORITY: u16 = 100;

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrafficSelector {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_port: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eth_src: Option<MacAddr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eth_dst: Option<MacAddr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vlan: Option<VlanId>,
}

impl TrafficSelector {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn with_in_port(&self, port: u32) -> Self {
        Self {
            in_port: Some(port),
            ..self.clone()
        }
    }

    pub fn matches(&self, in_port: u32, header: &PacketHeader) -> bool {
        self.in_port.is_none_or(|p| p == in_port)
            && self.eth_src.is_none_or(|m| m == header.eth_src)
            && self.eth_dst.is_none_or(|m| m == header.eth_dst)
            && self.vlan.is_none_or(|v| header.vlan == Some(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VlanAction {
    Push(VlanId),
    Pop,
    Set(VlanId),
}

/// Outputs are applied in order; an empty output list means drop.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TrafficTreatment {
    pub outputs: Vec<u32>,
    pub vlan_action: Option<VlanAction>,
}

impl TrafficTreatment {
    pub fn output(port: u32) -> Self {
        Self::outputs(vec![port])
    }

    pub fn outputs(outputs: Vec<u32>) -> Self {
        Self {
            outputs,
            vlan_action: None,
        }
    }

    pub fn drop() -> Self {
        Self::default()
    }

    pub fn is_drop(&self) -> bool {
        self.outputs.is_empty()
    }

    fn apply(&self, header: &PacketHeader) -> PacketHeader {
        let mut out = *header;
        match self.vlan_action {
            Some(VlanAction::Push(id) | VlanAction::Set(id)) => out.vlan = Some(id),
            Some(VlanAction::Pop) => out.vlan = None,
            None => {}
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FlowRule {
    pub id: RuleId,
    pub device: DeviceId,
    pub priority: u16,
    pub selector: TrafficSelector,
    pub treatment: TrafficTreatment,
    pub owner: IntentId,
}

/// Hands out fresh rule ids.
#[derive(Debug, Default)]
pub struct RuleIdGen(AtomicU64);

impl RuleIdGen {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next(&self) -> RuleId {
        RuleId(self.0.fetch_add(1, Ordering::Relaxed) + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PacketHeader {
    pub eth_src: MacAddr,
    pub eth_dst: MacAddr,
    pub vlan: Option<VlanId>,
}

impl PacketHeader {
    pub fn new(eth_src: MacAddr, eth_dst: MacAddr) -> Self {
        Self {
            eth_src,
            eth_dst,
            vlan: None,
        }
    }
}

/// Outcome of a packet walk. `delivered` pairs the edge port reached with the
/// number of devices traversed, ingress device included.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeliveryReport {
    pub delivered: BTreeSet<(ConnectPoint, u32)>,
    pub dropped_at: BTreeSet<DeviceId>,
    pub misses: BTreeSet<DeviceId>,
}

impl DeliveryReport {
    pub fn delivered_points(&self) -> BTreeSet<ConnectPoint> {
        self.delivered.iter().map(|&(cp, _)| cp).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FabricError {
    #[error("unknown device {0}")]
    UnknownDevice(DeviceId),
    #[error("rule {rule} outputs to port {port} which does not exist on {device}")]
    UnknownPort { rule: RuleId, device: DeviceId, port: u32 },
    #[error("unknown connect point {0}")]
    UnknownPoint(ConnectPoint),
    #[error("rule id {0} is already in use")]
    DuplicateRuleId(RuleId),
    #[error("duplicate rule on {device} at priority {priority} for intent {owner}")]
    DuplicateRule { device: DeviceId, priority: u16, owner: IntentId },
    #[error("device {device} would exceed its rule cap of {cap}")]
    DeviceCapacity { device: DeviceId, cap: usize },
    #[error("fabric would exceed its global rule cap of {cap}")]
    GlobalCapacity { cap: usize },
    #[error("forwarding loop detected at {device} after {hops} hops")]
    LoopDetected { device: DeviceId, hops: u32 },
}

impl FabricError {
    pub fn is_capacity(&self) -> bool {
        matches!(self, Self::DeviceCapacity { .. } | Self::GlobalCapacity { .. })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FabricLimits {
    pub per_device: Option<usize>,
    pub global: Option<usize>,
}

#[derive(Debug)]
struct FlowEntry {
    rule: FlowRule,
    packets: AtomicU64,
}

type TableKey = (Reverse<u16>, RuleId);
type DupKey = (u16, TrafficSelector, IntentId);

/// Rules of one device, iterated by descending priority then ascending id.
#[derive(Debug, Default)]
pub struct FlowTable {
    rules: BTreeMap<TableKey, FlowEntry>,
    keys: HashSet<DupKey>,
}

impl FlowTable {
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules(&self) -> impl Iterator<Item = &FlowRule> + '_ {
        self.rules.values().map(|e| &e.rule)
    }

    fn lookup(&self, in_port: u32, header: &PacketHeader) -> Option<&FlowEntry> {
        self.rules
            .values()
            .find(|e| e.rule.selector.matches(in_port, header))
    }

    fn insert(&mut self, rule: FlowRule) {
        self.keys.insert(dup_key(&rule));
        let key = (Reverse(rule.priority), rule.id);
        self.rules.insert(
            key,
            FlowEntry {
                rule,
                packets: AtomicU64::new(0),
            },
        );
    }

    fn remove(&mut self, key: &TableKey) -> Option<FlowRule> {
        let entry = self.rules.remove(key)?;
        self.keys.remove(&dup_key(&entry.rule));
        Some(entry.rule)
    }
}

fn dup_key(rule: &FlowRule) -> DupKey {
    (rule.priority, rule.selector.clone(), rule.owner)
}

#[derive(Debug, Default)]
struct FabricState {
    tables: BTreeMap<DeviceId, FlowTable>,
    by_owner: HashMap<IntentId, Vec<(DeviceId, TableKey)>>,
    by_id: HashMap<RuleId, DeviceId>,
}

/// Simulated switches for every device of a topology.
///
/// Installation and removal take the writer lock; packet walks share the
/// reader lock and bump per-rule counters atomically.
#[derive(Debug)]
pub struct Fabric {
    topology: Arc<Topology>,
    limits: FabricLimits,
    state: RwLock<FabricState>,
}

impl Fabric {
    pub fn new(topology: Arc<Topology>) -> Self {
        Self::with_limits(topology, FabricLimits::default())
    }

    pub fn with_limits(topology: Arc<Topology>, limits: FabricLimits) -> Self {
        let tables = topology.devices().map(|d| (d, FlowTable::default())).collect();
        Self {
            topology,
            limits,
            state: RwLock::new(FabricState {
                tables,
                ..Default::default()
            }),
        }
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    pub fn limits(&self) -> FabricLimits {
        self.limits
    }

    /// Install a batch of rules. Either every rule lands or none does.
    pub fn install_rules(&self, rules: Vec<FlowRule>) -> Result<usize, FabricError> {
        let mut state = self.state.write().unwrap();

        let mut batch_keys: HashSet<(DeviceId, DupKey)> = HashSet::new();
        let mut batch_ids = HashSet::new();
        let mut per_device: HashMap<DeviceId, usize> = HashMap::new();
        for rule in &rules {
            let table = state
                .tables
                .get(&rule.device)
                .ok_or(FabricError::UnknownDevice(rule.device))?;
            let ports = self.topology.ports(rule.device).expect("table implies device");
            if let Some(&port) = rule.treatment.outputs.iter().find(|p| !ports.contains(p)) {
                return Err(FabricError::UnknownPort {
                    rule: rule.id,
                    device: rule.device,
                    port,
                });
            }
            if state.by_id.contains_key(&rule.id) || !batch_ids.insert(rule.id) {
                return Err(FabricError::DuplicateRuleId(rule.id));
            }
            let key = dup_key(rule);
            if table.keys.contains(&key) || !batch_keys.insert((rule.device, key)) {
                return Err(FabricError::DuplicateRule {
                    device: rule.device,
                    priority: rule.priority,
                    owner: rule.owner,
                });
            }
            *per_device.entry(rule.device).or_default() += 1;
        }
        if let Some(cap) = self.limits.per_device {
            for (&device, &added) in &per_device {
                if state.tables[&device].len() + added > cap {
                    return Err(FabricError::DeviceCapacity { device, cap });
                }
            }
        }
        if let Some(cap) = self.limits.global {
            if state.by_id.len() + rules.len() > cap {
                return Err(FabricError::GlobalCapacity { cap });
            }
        }

        let count = rules.len();
        for rule in rules {
            let key = (Reverse(rule.priority), rule.id);
            state.by_owner.entry(rule.owner).or_default().push((rule.device, key));
            state.by_id.insert(rule.id, rule.device);
            state.tables.get_mut(&rule.device).unwrap().insert(rule);
        }
        Ok(count)
    }

    /// Remove every rule owned by `owner`; returns how many were removed.
    pub fn remove_rules(&self, owner: IntentId) -> usize {
        let mut state = self.state.write().unwrap();
        let Some(keys) = state.by_owner.remove(&owner) else {
            return 0;
        };
        let mut removed = 0;
        for (device, key) in keys {
            if let Some(rule) = state.tables.get_mut(&device).and_then(|t| t.remove(&key)) {
                state.by_id.remove(&rule.id);
                removed += 1;
            }
        }
        removed
    }

    /// Drop every rule on every device.
    pub fn clear(&self) -> usize {
        let mut state = self.state.write().unwrap();
        let removed = state.by_id.len();
        for table in state.tables.values_mut() {
            *table = FlowTable::default();
        }
        state.by_owner.clear();
        state.by_id.clear();
        removed
    }

    pub fn rule_count(&self) -> usize {
        self.state.read().unwrap().by_id.len()
    }

    pub fn device_rule_count(&self, device: DeviceId) -> usize {
        self.state
            .read()
            .unwrap()
            .tables
            .get(&device)
            .map_or(0, FlowTable::len)
    }

    /// Rules of one device in match order.
    pub fn table(&self, device: DeviceId) -> Vec<FlowRule> {
        self.state
            .read()
            .unwrap()
            .tables
            .get(&device)
            .map(|t| t.rules().cloned().collect())
            .unwrap_or_default()
    }

    /// Rules owned by `owner`, in installation order.
    pub fn rules_of(&self, owner: IntentId) -> Vec<FlowRule> {
        let state = self.state.read().unwrap();
        state
            .by_owner
            .get(&owner)
            .into_iter()
            .flatten()
            .filter_map(|(device, key)| state.tables.get(device)?.rules.get(key))
            .map(|e| e.rule.clone())
            .collect()
    }

    pub fn packet_count(&self, rule: RuleId) -> Option<u64> {
        let state = self.state.read().unwrap();
        let device = state.by_id.get(&rule)?;
        state.tables[device]
            .rules
            .values()
            .find(|e| e.rule.id == rule)
            .map(|e| e.packets.load(Ordering::Relaxed))
    }

    /// Walk a packet entering at `ingress` through the installed rules.
    ///
    /// Each branch ends at an edge port, a drop, or a table miss. A branch
    /// that visits more than `devices + 1` devices is reported as a loop.
    pub fn inject_packet(
        &self,
        ingress: ConnectPoint,
        header: PacketHeader,
    ) -> Result<DeliveryReport, FabricError> {
        if !self.topology.contains_point(ingress) {
            return Err(FabricError::UnknownPoint(ingress));
        }
        let ttl = self.topology.device_count() as u32 + 1;
        let state = self.state.read().unwrap();
        let mut report = DeliveryReport::default();
        let mut pending = vec![(ingress, header, 1u32)];

        while let Some((at, header, hops)) = pending.pop() {
            if hops > ttl {
                return Err(FabricError::LoopDetected { device: at.device, hops });
            }
            let Some(entry) = state.tables[&at.device].lookup(at.port, &header) else {
                report.misses.insert(at.device);
                continue;
            };
            entry.packets.fetch_add(1, Ordering::Relaxed);
            let treatment = &entry.rule.treatment;
            if treatment.is_drop() {
                report.dropped_at.insert(at.device);
                continue;
            }
            let header = treatment.apply(&header);
            for &port in &treatment.outputs {
                let out = ConnectPoint::new(at.device, port);
                match self.topology.link_from(out) {
                    Some(link) => pending.push((link.dst, header, hops + 1)),
                    None => {
                        report.delivered.insert((out, hops));
                    }
                }
            }
        }
        Ok(report)
    }
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

    fn chain() -> Arc<Topology> {
        Arc::new(
            Topology::builder()
                .device(d(1), [1, 2])
                .device(d(2), [1, 2])
                .device(d(3), [1, 2])
                .link(cp(1, 2), cp(2, 1))
                .link(cp(2, 2), cp(3, 1))
                .build()
                .unwrap(),
        )
    }

    fn rule(id: u64, device: u64, in_port: u32, out: u32, owner: u64) -> FlowRule {
        FlowRule {
            id: RuleId(id),
            device: d(device),
            priority: DEFAULT_PRIORITY,
            selector: TrafficSelector::default().with_in_port(in_port),
            treatment: TrafficTreatment::output(out),
            owner: IntentId(owner),
        }
    }

    fn header() -> PacketHeader {
        PacketHeader::new(MacAddr::local(1), MacAddr::local(2))
    }

    #[test]
    fn install_three_rules_on_three_devices() {
        let fabric = Fabric::new(chain());
        let n = fabric
            .install_rules(vec![rule(1, 1, 1, 2, 7), rule(2, 2, 1, 2, 7), rule(3, 3, 1, 2, 7)])
            .unwrap();
        assert_eq!(n, 3);
        for dev in 1..=3 {
            assert_eq!(fabric.device_rule_count(d(dev)), 1);
        }
    }

    #[test]
    fn batch_is_atomic() {
        let fabric = Fabric::new(chain());
        let err = fabric
            .install_rules(vec![rule(1, 1, 1, 2, 7), rule(2, 9, 1, 2, 7), rule(3, 3, 1, 2, 7)])
            .unwrap_err();
        assert_eq!(err, FabricError::UnknownDevice(d(9)));
        assert_eq!(fabric.rule_count(), 0);

        let err = fabric
            .install_rules(vec![rule(1, 1, 1, 2, 7), rule(2, 2, 1, 5, 7)])
            .unwrap_err();
        assert!(matches!(err, FabricError::UnknownPort { port: 5, .. }));
        assert_eq!(fabric.rule_count(), 0);
    }

    #[test]
    fn device_cap() {
        let fabric = Fabric::with_limits(
            chain(),
            FabricLimits {
                per_device: Some(10),
                global: None,
            },
        );
        let batch: Vec<_> = (0..11).map(|i| rule(i + 1, 1, 1, 2, 100 + i)).collect();
        let err = fabric.install_rules(batch).unwrap_err();
        assert_eq!(err, FabricError::DeviceCapacity { device: d(1), cap: 10 });
        assert!(err.is_capacity());
        assert_eq!(fabric.rule_count(), 0);

        let batch: Vec<_> = (0..10).map(|i| rule(i + 1, 1, 1, 2, 100 + i)).collect();
        assert_eq!(fabric.install_rules(batch).unwrap(), 10);
    }

    #[test]
    fn global_cap() {
        let fabric = Fabric::with_limits(
            chain(),
            FabricLimits {
                per_device: None,
                global: Some(2),
            },
        );
        fabric.install_rules(vec![rule(1, 1, 1, 2, 1), rule(2, 2, 1, 2, 1)]).unwrap();
        assert_eq!(
            fabric.install_rules(vec![rule(3, 3, 1, 2, 2)]).unwrap_err(),
            FabricError::GlobalCapacity { cap: 2 }
        );
    }

    #[test]
    fn duplicates_rejected_but_distinct_owners_coexist() {
        let fabric = Fabric::new(chain());
        fabric.install_rules(vec![rule(1, 1, 1, 2, 7)]).unwrap();
        assert!(matches!(
            fabric.install_rules(vec![rule(2, 1, 1, 2, 7)]).unwrap_err(),
            FabricError::DuplicateRule { .. }
        ));
        assert_eq!(
            fabric.install_rules(vec![rule(1, 2, 1, 2, 8)]).unwrap_err(),
            FabricError::DuplicateRuleId(RuleId(1))
        );
        assert!(matches!(
            fabric.install_rules(vec![rule(3, 2, 1, 2, 8), rule(4, 2, 1, 2, 8)]).unwrap_err(),
            FabricError::DuplicateRule { .. }
        ));
        fabric.install_rules(vec![rule(5, 1, 1, 2, 8)]).unwrap();
        assert_eq!(fabric.device_rule_count(d(1)), 2);
    }

    #[test]
    fn remove_by_owner() {
        let fabric = Fabric::new(chain());
        fabric
            .install_rules(vec![rule(1, 1, 1, 2, 7), rule(2, 2, 1, 2, 7), rule(3, 3, 1, 2, 7), rule(4, 1, 2, 1, 8)])
            .unwrap();
        assert_eq!(fabric.remove_rules(IntentId(7)), 3);
        assert_eq!(fabric.remove_rules(IntentId(7)), 0);
        assert_eq!(fabric.remove_rules(IntentId(99)), 0);
        assert_eq!(fabric.rule_count(), 1);
        // freed ids can be reused once gone
        fabric.install_rules(vec![rule(1, 1, 1, 2, 9)]).unwrap();
    }

    #[test]
    fn match_order_is_priority_then_id() {
        let fabric = Fabric::new(chain());
        let mut low = rule(1, 1, 1, 2, 1);
        low.priority = 10;
        let high_late = rule(5, 1, 1, 1, 2);
        let high_early = rule(3, 1, 1, 2, 3);
        fabric.install_rules(vec![low, high_late, high_early]).unwrap();
        let ids: Vec<_> = fabric.table(d(1)).iter().map(|r| r.id.0).collect();
        assert_eq!(ids, vec![3, 5, 1]);
    }

    #[test]
    fn walk_along_chain() {
        let fabric = Fabric::new(chain());
        fabric
            .install_rules(vec![rule(1, 1, 1, 2, 7), rule(2, 2, 1, 2, 7), rule(3, 3, 1, 2, 7)])
            .unwrap();
        let report = fabric.inject_packet(cp(1, 1), header()).unwrap();
        assert_eq!(report.delivered, BTreeSet::from([(cp(3, 2), 3)]));
        assert!(report.misses.is_empty());
        assert!(report.dropped_at.is_empty());
        for id in 1..=3 {
            assert_eq!(fabric.packet_count(RuleId(id)), Some(1));
        }
        // wrong in_port: miss at the ingress device
        let report = fabric.inject_packet(cp(1, 2), header()).unwrap();
        assert_eq!(report.misses, BTreeSet::from([d(1)]));
    }

    #[test]
    fn empty_fabric_misses_at_ingress() {
        let fabric = Fabric::new(chain());
        let report = fabric.inject_packet(cp(2, 1), header()).unwrap();
        assert!(report.delivered.is_empty());
        assert_eq!(report.misses, BTreeSet::from([d(2)]));
        assert_eq!(
            fabric.inject_packet(cp(2, 9), header()).unwrap_err(),
            FabricError::UnknownPoint(cp(2, 9))
        );
    }

    #[test]
    fn two_device_cycle_is_a_loop() {
        let fabric = Fabric::new(chain());
        // d1 in 1 -> 2 (to d2); d2 in 1 -> 1 (back to d1); d1 in 2 -> 2
        fabric
            .install_rules(vec![rule(1, 1, 1, 2, 7), rule(2, 2, 1, 1, 7), rule(3, 1, 2, 2, 7)])
            .unwrap();
        let err = fabric.inject_packet(cp(1, 1), header()).unwrap_err();
        assert!(matches!(err, FabricError::LoopDetected { hops: 5, .. }));
    }

    #[test]
    fn drop_and_multicast_and_vlan() {
        let fabric = Fabric::new(chain());
        let mut fanout = rule(1, 2, 1, 2, 7);
        fanout.treatment = TrafficTreatment {
            outputs: vec![2, 1],
            vlan_action: Some(VlanAction::Push(VlanId::new(42).unwrap())),
        };
        let mut tagged_only = rule(2, 3, 1, 2, 7);
        tagged_only.selector.vlan = Some(VlanId::new(42).unwrap());
        let mut drop = rule(3, 1, 2, 1, 7);
        drop.treatment = TrafficTreatment::drop();
        fabric.install_rules(vec![fanout, tagged_only, drop]).unwrap();

        let report = fabric.inject_packet(cp(2, 1), header()).unwrap();
        assert_eq!(report.delivered, BTreeSet::from([(cp(3, 2), 2)]));
        assert_eq!(report.dropped_at, BTreeSet::from([d(1)]));
        assert!(report.misses.is_empty());
    }
}
