// SPDX-License-Identifier: Apache-2.0

//! Shortest paths against exhaustive simple-path enumeration, and the
//! topology document round trip.

use intentd_core::net::random::RandomTopology;
use intentd_core::net::{load_topology, shortest_path, Link, Topology};
use intentd_core::DeviceId;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Cheapest simple path by brute force; ties resolved by the smallest
/// (next device, source port) sequence.
fn brute_force(topo: &Topology, src: DeviceId, dst: DeviceId) -> Option<(f64, Vec<(DeviceId, u32)>)> {
    fn walk(
        topo: &Topology,
        at: DeviceId,
        dst: DeviceId,
        cost: f64,
        trail: &mut Vec<Link>,
        best: &mut Option<(f64, Vec<(DeviceId, u32)>)>,
    ) {
        if at == dst {
            let key: Vec<_> = trail.iter().map(|l| (l.dst.device, l.src.port)).collect();
            let better = match best {
                None => true,
                Some((c, k)) => {
                    if (cost - *c).abs() <= 1e-9 {
                        key < *k
                    } else {
                        cost < *c
                    }
                }
            };
            if better {
                *best = Some((cost, key));
            }
            return;
        }
        for link in topo.links().iter().filter(|l| l.src.device == at) {
            let next = link.dst.device;
            let seen = trail.first().is_some_and(|l| l.src.device == next) || trail.iter().any(|l| l.dst.device == next);
            if seen {
                continue;
            }
            trail.push(*link);
            walk(topo, next, dst, cost + link.weight, trail, best);
            trail.pop();
        }
    }
    let mut best = None;
    walk(topo, src, dst, 0.0, &mut Vec::new(), &mut best);
    best
}

fn check_all_pairs(topo: &Topology) {
    let devices: Vec<_> = topo.devices().collect();
    for &src in &devices {
        for &dst in &devices {
            let expected = brute_force(topo, src, dst);
            match (shortest_path(topo, src, dst), expected) {
                (Ok(path), Some((cost, key))) => {
                    assert!((path.cost() - cost).abs() <= 1e-9, "{src}->{dst}: {} vs {cost}", path.cost());
                    let got: Vec<_> = path.links().iter().map(|l| (l.dst.device, l.src.port)).collect();
                    assert_eq!(got, key, "{src}->{dst} tie-break");
                    let devs = path.devices();
                    assert_eq!(devs.first(), Some(&src));
                    assert_eq!(devs.last(), Some(&dst));
                    for pair in path.links().windows(2) {
                        assert_eq!(pair[0].dst.device, pair[1].src.device);
                    }
                    let mut unique = devs.clone();
                    unique.sort();
                    unique.dedup();
                    assert_eq!(unique.len(), devs.len());
                }
                (Err(_), None) => {}
                (got, want) => panic!("{src}->{dst}: got {got:?}, oracle {want:?}"),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unit_weights_match_enumeration(seed in any::<u64>()) {
        let topo = RandomTopology::default().generate(&mut ChaCha8Rng::seed_from_u64(seed));
        check_all_pairs(&topo);
    }

    #[test]
    fn integer_weights_match_enumeration(seed in any::<u64>()) {
        let params = RandomTopology { max_weight: 4, connected: false, ..Default::default() };
        let topo = params.generate(&mut ChaCha8Rng::seed_from_u64(seed));
        check_all_pairs(&topo);
    }

    #[test]
    fn shortest_path_is_deterministic(seed in any::<u64>()) {
        let topo = RandomTopology::default().generate(&mut ChaCha8Rng::seed_from_u64(seed));
        let devices: Vec<_> = topo.devices().collect();
        for &src in &devices {
            for &dst in &devices {
                prop_assert_eq!(shortest_path(&topo, src, dst), shortest_path(&topo, src, dst));
            }
        }
    }

    #[test]
    fn canonical_document_round_trips(seed in any::<u64>()) {
        let params = RandomTopology { max_weight: 3, connected: false, ..Default::default() };
        let topo = params.generate(&mut ChaCha8Rng::seed_from_u64(seed));
        let canonical = topo.to_json();
        let reloaded = load_topology(&canonical).unwrap();
        prop_assert_eq!(&reloaded, &topo);
        prop_assert_eq!(reloaded.to_json(), canonical);
    }
}
