// SPDX-License-Identifier: Apache-2.0

//! Seeded random topologies for property tests and synthetic workloads.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use super::topology::Topology;
use crate::ids::{ConnectPoint, DeviceId};

#[derive(Debug, Clone, Copy)]
pub struct RandomTopology {
    pub max_devices: usize,
    /// Upper bound on bidirectional links.
    pub max_links: usize,
    /// Edge ports added to every device besides its link ports.
    pub edge_ports: u32,
    /// Largest integer link weight; 1 gives hop-count routing.
    pub max_weight: u32,
    /// Start from a spanning tree so every device pair is connected.
    pub connected: bool,
}

impl Default for RandomTopology {
    fn default() -> Self {
        Self {
            max_devices: 8,
            max_links: 16,
            edge_ports: 3,
            max_weight: 1,
            connected: true,
        }
    }
}

impl RandomTopology {
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Topology {
        let n = rng.random_range(2..=self.max_devices.max(2));
        let devices: Vec<DeviceId> = (1..=n as u64).map(DeviceId::new).collect();

        let mut pairs: Vec<(usize, usize)> = Vec::new();
        if self.connected {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            for i in 1..n {
                let parent = order[rng.random_range(0..i)];
                pairs.push((parent, order[i]));
            }
        }
        let max_links = self.max_links.max(pairs.len());
        let extra = rng.random_range(0..=max_links - pairs.len());
        for _ in 0..extra {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b {
                pairs.push((a, b));
            }
        }

        let mut next_port = vec![1u32; n];
        let mut builder = Topology::builder();
        let mut links = Vec::new();
        for (a, b) in pairs {
            let src = ConnectPoint::new(devices[a], next_port[a]);
            let dst = ConnectPoint::new(devices[b], next_port[b]);
            next_port[a] += 1;
            next_port[b] += 1;
            let weight = rng.random_range(1..=self.max_weight.max(1)) as f64;
            links.push((src, dst, weight));
        }
        for (i, &device) in devices.iter().enumerate() {
            builder = builder.device(device, 1..next_port[i] + self.edge_ports);
        }
        for (src, dst, weight) in links {
            builder = builder.weighted_link(src, dst, weight);
        }
        builder.build().expect("generated topology is valid")
    }
}

/// Pick `count` distinct edge ports, or `None` if there are not enough.
pub fn pick_edge_ports<R: Rng + ?Sized>(topo: &Topology, count: usize, rng: &mut R) -> Option<Vec<ConnectPoint>> {
    let edges = topo.edge_ports();
    if edges.len() < count {
        return None;
    }
    Some(edges.choose_multiple(rng, count).copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn respects_bounds_and_is_reproducible() {
        let params = RandomTopology::default();
        for seed in 0..50 {
            let a = params.generate(&mut ChaCha8Rng::seed_from_u64(seed));
            let b = params.generate(&mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(a, b);
            assert!(a.device_count() <= 8);
            assert!(a.links().len() / 2 <= 16);
            assert!(a.edge_ports().len() >= 3 * a.device_count());
        }
    }
}
