// SPDX-License-Identifier: Apache-2.0

//! Seeded choice of the intent each benchmark cell repeats.

use intentd_core::net::random::pick_edge_ports;
use intentd_core::net::Topology;
use intentd_core::{ConnectPoint, IntentRequest, IntentType};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Egress count of single-to-multi intents, ingress count of multi-to-single.
pub const MULTIPOINT_FANOUT: usize = 2;

/// Edge ports on distinct devices where the topology allows it, so every
/// endpoint pair needs a real path.
fn pick_spread(topo: &Topology, count: usize, rng: &mut ChaCha8Rng) -> Option<Vec<ConnectPoint>> {
    let edges = topo.edge_ports();
    let mut devices: Vec<_> = topo
        .devices()
        .filter(|d| edges.iter().any(|e| e.device == *d))
        .collect();
    if devices.len() < count {
        return pick_edge_ports(topo, count, rng);
    }
    devices.shuffle(rng);
    devices[..count]
        .iter()
        .map(|&d| {
            let on_device: Vec<_> = edges.iter().filter(|e| e.device == d).copied().collect();
            on_device.choose(rng).copied()
        })
        .collect()
}

/// The request a cell of `intent_type` submits `workload` times. The same
/// seed and topology always give the same request.
pub fn bench_request(topo: &Topology, intent_type: IntentType, seed: u64) -> Option<IntentRequest> {
    let stream = match intent_type {
        IntentType::PointToPoint => 1,
        IntentType::SingleToMultiPoint => 2,
        IntentType::MultiToSinglePoint => 3,
        IntentType::HostToHost => 4,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let request = match intent_type {
        IntentType::PointToPoint => {
            let p = pick_spread(topo, 2, &mut rng)?;
            IntentRequest::point_to_point(p[0], p[1])
        }
        IntentType::SingleToMultiPoint => {
            let p = pick_spread(topo, MULTIPOINT_FANOUT + 1, &mut rng)?;
            IntentRequest::single_to_multi(p[0], p[1..].iter().copied())
        }
        IntentType::MultiToSinglePoint => {
            let p = pick_spread(topo, MULTIPOINT_FANOUT + 1, &mut rng)?;
            IntentRequest::multi_to_single(p[1..].iter().copied(), p[0])
        }
        IntentType::HostToHost => {
            let hosts: Vec<_> = topo.hosts().map(|h| h.id.clone()).collect();
            let pair: Vec<_> = hosts.choose_multiple(&mut rng, 2).cloned().collect();
            if pair.len() < 2 {
                return None;
            }
            IntentRequest::host_to_host(pair[0].clone(), pair[1].clone())
        }
    };
    Some(request)
}
