// SPDX-License-Identifier: Apache-2.0

//! Immutable network topology and path computation.

mod path;
pub mod random;
mod topology;

pub use path::{shortest_path, Path, PathError};
pub use topology::{
    default_topology, load_topology, DeviceDocument, Host, HostDocument, Link, LinkDocument, Topology,
    TopologyBuilder, TopologyDocument, TopologyError,
};
