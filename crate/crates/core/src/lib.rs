// SPDX-License-Identifier: Apache-2.0

//! Core of intentd: topology model, simulated switch fabric and the intent
//! framework that compiles connectivity intents into flow rules.

pub mod fabric;
pub mod ids;
pub mod intent;
pub mod net;
pub mod timing;

pub use ids::{ConnectPoint, DeviceId, IntentId, MacAddr, RuleId, VlanId};
pub use intent::{Controller, ControllerConfig, Intent, IntentKind, IntentRequest, IntentState, IntentType};
pub use net::Topology;
