// SPDX-License-Identifier: Apache-2.0

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use thiserror::Error;

use super::topology::{Link, Topology};
use crate::ids::DeviceId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("unknown device {0}")]
    UnknownDevice(DeviceId),
    #[error("no path from {src} to {dst}")]
    NoPath { src: DeviceId, dst: DeviceId },
}

/// A loop-free chain of links. Empty when source and destination coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    source: DeviceId,
    links: Vec<Link>,
}

impl Path {
    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn source(&self) -> DeviceId {
        self.source
    }

    pub fn destination(&self) -> DeviceId {
        self.links.last().map_or(self.source, |l| l.dst.device)
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn cost(&self) -> f64 {
        self.links.iter().map(|l| l.weight).sum()
    }

    /// Devices visited, source first.
    pub fn devices(&self) -> Vec<DeviceId> {
        std::iter::once(self.source)
            .chain(self.links.iter().map(|l| l.dst.device))
            .collect()
    }
}

#[derive(Debug, PartialEq)]
struct Frontier {
    cost: f64,
    device: DeviceId,
}

impl Eq for Frontier {}

// Min-heap on cost.
impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.device.cmp(&self.device))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Cost of the cheapest path from every reachable device to `target`.
/// Links are symmetric, so a forward search from `target` suffices.
fn distances_to(topo: &Topology, target: DeviceId) -> HashMap<DeviceId, f64> {
    let mut dist = HashMap::from([(target, 0.0)]);
    let mut heap = BinaryHeap::from([Frontier { cost: 0.0, device: target }]);
    while let Some(Frontier { cost, device }) = heap.pop() {
        if cost > dist[&device] {
            continue;
        }
        for link in topo.links_from(device) {
            let next = link.dst.device;
            let candidate = cost + link.weight;
            if dist.get(&next).is_none_or(|&d| candidate < d) {
                dist.insert(next, candidate);
                heap.push(Frontier { cost: candidate, device: next });
            }
        }
    }
    dist
}

fn same_cost(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Minimum-weight path from `src` to `dst`.
///
/// Among equal-cost paths the one whose sequence of next-device ids is
/// lexicographically smallest wins; parallel links to the same neighbour are
/// ordered by source port.
pub fn shortest_path(topo: &Topology, src: DeviceId, dst: DeviceId) -> Result<Path, PathError> {
    for device in [src, dst] {
        if !topo.contains_device(device) {
            return Err(PathError::UnknownDevice(device));
        }
    }
    let dist = distances_to(topo, dst);
    let mut remaining = *dist.get(&src).ok_or(PathError::NoPath { src, dst })?;

    let mut links = Vec::new();
    let mut visited = HashSet::from([src]);
    let mut at = src;
    while at != dst {
        let step = topo
            .links_from(at)
            .filter(|l| !visited.contains(&l.dst.device))
            .filter(|l| {
                dist.get(&l.dst.device)
                    .is_some_and(|&d| same_cost(remaining, l.weight + d))
            })
            .min_by_key(|l| (l.dst.device, l.src.port))
            .copied()
            .expect("a device on a shortest path has a successor on one");
        remaining = dist[&step.dst.device];
        at = step.dst.device;
        visited.insert(at);
        links.push(step);
    }
    Ok(Path { source: src, links })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::ConnectPoint;

    fn d(n: u64) -> DeviceId {
        DeviceId::new(n)
    }

    fn cp(n: u64, port: u32) -> ConnectPoint {
        ConnectPoint::new(d(n), port)
    }

    fn chain() -> Topology {
        Topology::builder()
            .device(d(1), [1, 2])
            .device(d(2), [1, 2])
            .device(d(3), [1, 2])
            .link(cp(1, 2), cp(2, 1))
            .link(cp(2, 2), cp(3, 1))
            .build()
            .unwrap()
    }

    #[test]
    fn chain_goes_through_middle() {
        let path = shortest_path(&chain(), d(1), d(3)).unwrap();
        assert_eq!(path.len(), 2);
        assert_eq!(path.devices(), vec![d(1), d(2), d(3)]);
        assert_eq!(path.links()[0].src, cp(1, 2));
        assert_eq!(path.links()[1].dst, cp(3, 1));
    }

    #[test]
    fn identity_is_empty() {
        let path = shortest_path(&chain(), d(1), d(1)).unwrap();
        assert!(path.is_empty());
        assert_eq!(path.destination(), d(1));
    }

    #[test]
    fn disconnected_is_an_error() {
        let topo = Topology::builder()
            .device(d(1), [1, 2])
            .device(d(2), [1, 2])
            .device(d(3), [1])
            .link(cp(1, 2), cp(2, 1))
            .build()
            .unwrap();
        assert_eq!(
            shortest_path(&topo, d(1), d(3)).unwrap_err(),
            PathError::NoPath { src: d(1), dst: d(3) }
        );
        assert_eq!(
            shortest_path(&topo, d(1), d(8)).unwrap_err(),
            PathError::UnknownDevice(d(8))
        );
    }

    #[test]
    fn diamond_tie_prefers_smaller_next_device() {
        // d1 -> {d2, d3} -> d4; d3 is declared first so insertion order
        // cannot explain the choice.
        let topo = Topology::builder()
            .device(d(1), [1, 2])
            .device(d(2), [1, 2])
            .device(d(3), [1, 2])
            .device(d(4), [1, 2])
            .link(cp(1, 1), cp(3, 1))
            .link(cp(3, 2), cp(4, 2))
            .link(cp(1, 2), cp(2, 1))
            .link(cp(2, 2), cp(4, 1))
            .build()
            .unwrap();
        let path = shortest_path(&topo, d(1), d(4)).unwrap();
        assert_eq!(path.devices(), vec![d(1), d(2), d(4)]);
        // and in reverse, d4 -> d2 -> d1
        assert_eq!(shortest_path(&topo, d(4), d(1)).unwrap().devices(), vec![d(4), d(2), d(1)]);
    }

    #[test]
    fn weights_beat_hop_count() {
        let topo = Topology::builder()
            .device(d(1), [1, 2])
            .device(d(2), [1, 2])
            .device(d(3), [1, 2])
            .weighted_link(cp(1, 1), cp(3, 1), 5.0)
            .link(cp(1, 2), cp(2, 1))
            .link(cp(2, 2), cp(3, 2))
            .build()
            .unwrap();
        assert_eq!(shortest_path(&topo, d(1), d(3)).unwrap().devices(), vec![d(1), d(2), d(3)]);
    }
}
