// SPDX-License-Identifier: Apache-2.0

//! Compiled intents checked by walking packets through the fabric.

use std::collections::{HashMap, VecDeque};

use intentd_core::fabric::PacketHeader;
use intentd_core::net::random::{pick_edge_ports, RandomTopology};
use intentd_core::net::Topology;
use intentd_core::{ConnectPoint, Controller, DeviceId, IntentRequest, IntentState, MacAddr};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Hop distance by breadth-first search over the declared links.
fn bfs_hops(topo: &Topology, from: DeviceId) -> HashMap<DeviceId, u32> {
    let mut dist = HashMap::from([(from, 0)]);
    let mut queue = VecDeque::from([from]);
    while let Some(at) = queue.pop_front() {
        for link in topo.links().iter().filter(|l| l.src.device == at) {
            if !dist.contains_key(&link.dst.device) {
                dist.insert(link.dst.device, dist[&at] + 1);
                queue.push_back(link.dst.device);
            }
        }
    }
    dist
}

fn random_request(topo: &Topology, rng: &mut ChaCha8Rng) -> IntentRequest {
    let extra = rng.random_range(1..=4);
    match rng.random_range(0..3) {
        0 => {
            let p = pick_edge_ports(topo, 2, rng).unwrap();
            IntentRequest::point_to_point(p[0], p[1])
        }
        1 => {
            let p = pick_edge_ports(topo, extra + 1, rng).unwrap();
            IntentRequest::single_to_multi(p[0], p[1..].iter().copied())
        }
        _ => {
            let p = pick_edge_ports(topo, extra + 1, rng).unwrap();
            IntentRequest::multi_to_single(p[1..].iter().copied(), p[0])
        }
    }
}

fn header() -> PacketHeader {
    PacketHeader::new(MacAddr::local(10), MacAddr::local(20))
}

/// Walk from every ingress and compare with the intent's egress set.
fn assert_delivers(ctl: &Controller, request: &IntentRequest) {
    let topo = ctl.topology();
    let egresses = request.kind.egress_points();
    for ingress in request.kind.ingress_points() {
        let report = ctl.fabric().inject_packet(ingress, header()).unwrap();
        assert_eq!(report.delivered_points(), egresses, "from {ingress}");
        assert!(report.misses.is_empty(), "misses {:?}", report.misses);
        assert!(report.dropped_at.is_empty());
        let hops = bfs_hops(topo, ingress.device);
        for (egress, count) in &report.delivered {
            assert_eq!(*count, hops[&egress.device] + 1, "{ingress} -> {egress}");
        }
    }
}

#[test]
fn random_intents_deliver_exactly_to_their_egresses() {
    let params = RandomTopology::default();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topo = params.generate(&mut rng);
        let request = random_request(&topo, &mut rng);
        let ctl = Controller::with_topology(topo);
        let submitted = ctl.submit(request.clone()).unwrap();
        assert_eq!(submitted.state, IntentState::Installed, "seed {seed}: {request:?}");
        assert_delivers(&ctl, &request);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn p2p_rule_accounting_and_withdraw(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topo = RandomTopology::default().generate(&mut rng);
        let ctl = Controller::with_topology(topo.clone());
        // background intent so the baseline is non-zero
        let bg = pick_edge_ports(&topo, 2, &mut rng).unwrap();
        ctl.submit(IntentRequest::point_to_point(bg[0], bg[1])).unwrap();
        let baseline = ctl.fabric().rule_count();

        let p = pick_edge_ports(&topo, 2, &mut rng).unwrap();
        let s = ctl.submit(IntentRequest::point_to_point(p[0], p[1])).unwrap();
        let devices_on_path = bfs_hops(&topo, p[0].device)[&p[1].device] as usize + 1;
        prop_assert_eq!(s.rule_count, devices_on_path);
        prop_assert_eq!(ctl.fabric().rules_of(s.id).len(), devices_on_path);
        prop_assert_eq!(ctl.fabric().rule_count(), baseline + devices_on_path);

        ctl.withdraw(s.id).unwrap();
        prop_assert_eq!(ctl.fabric().rule_count(), baseline);
    }

    #[test]
    fn counters_count_packet_copies(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topo = RandomTopology::default().generate(&mut rng);
        let ctl = Controller::with_topology(topo.clone());
        let p = pick_edge_ports(&topo, 4, &mut rng).unwrap();
        let s = ctl.submit(IntentRequest::single_to_multi(p[0], p[1..].iter().copied())).unwrap();
        let rules = ctl.fabric().rules_of(s.id);
        let before: Vec<_> = rules.iter().map(|r| ctl.fabric().packet_count(r.id).unwrap()).collect();
        prop_assert!(before.iter().all(|&c| c == 0));

        let injections = rng.random_range(1..4u64);
        for _ in 0..injections {
            ctl.fabric().inject_packet(p[0], header()).unwrap();
        }
        // each tree device sees exactly one copy per injection
        for rule in &rules {
            prop_assert_eq!(ctl.fabric().packet_count(rule.id), Some(injections));
        }
    }

    #[test]
    fn injection_is_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topo = RandomTopology::default().generate(&mut rng);
        let request = random_request(&topo, &mut rng);
        let ctl = Controller::with_topology(topo);
        ctl.submit(request.clone()).unwrap();
        for ingress in request.kind.ingress_points() {
            let a = ctl.fabric().inject_packet(ingress, header()).unwrap();
            let b = ctl.fabric().inject_packet(ingress, header()).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn same_request_same_rules(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topo = RandomTopology::default().generate(&mut rng);
        let request = random_request(&topo, &mut rng);
        let shape = |ctl: &Controller| {
            let id = ctl.submit(request.clone()).unwrap().id;
            ctl.fabric()
                .rules_of(id)
                .into_iter()
                .map(|r| (r.device, r.priority, r.selector, r.treatment))
                .collect::<Vec<_>>()
        };
        prop_assert_eq!(shape(&Controller::with_topology(topo.clone())), shape(&Controller::with_topology(topo)));
    }
}

#[test]
fn disconnected_multipoint_fails_whole() {
    let params = RandomTopology {
        connected: false,
        max_links: 1,
        ..Default::default()
    };
    let mut failures = 0;
    for seed in 0..40u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topo = params.generate(&mut rng);
        let p = pick_edge_ports(&topo, 3, &mut rng).unwrap();
        let reachable = bfs_hops(&topo, p[0].device);
        let request = IntentRequest::single_to_multi(p[0], [p[1], p[2]]);
        let ctl = Controller::with_topology(topo);
        let s = ctl.submit(request).unwrap();
        let all_reachable = [p[1], p[2]].iter().all(|e: &ConnectPoint| reachable.contains_key(&e.device));
        if all_reachable {
            assert_eq!(s.state, IntentState::Installed);
        } else {
            failures += 1;
            assert_eq!(s.state, IntentState::Failed);
            assert_eq!(ctl.fabric().rule_count(), 0);
        }
    }
    assert!(failures > 0);
}
