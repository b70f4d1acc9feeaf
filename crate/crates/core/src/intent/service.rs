// SPDX-License-Identifier: Apache-2.0

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use thiserror::Error;

use super::compile::{compile_rules, host_to_host_requests};
use super::store::IntentStore;
use super::{InstallableIntent, Intent, IntentKind, IntentRequest, IntentState, ValidationError};
use crate::fabric::{Fabric, FabricLimits, RuleIdGen};
use crate::ids::IntentId;
use crate::net::Topology;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubmitError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("intent store is full ({capacity} live intents)")]
    Capacity { capacity: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntentError {
    #[error("intent {0} not found")]
    NotFound(IntentId),
    #[error("intent {id} is {state}, expected INSTALLED")]
    IllegalState { id: IntentId, state: IntentState },
    #[error("intent {id} belongs to host-to-host intent {parent}; withdraw that instead")]
    OwnedByParent { id: IntentId, parent: IntentId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Submitted {
    pub id: IntentId,
    pub state: IntentState,
    pub rule_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub id: IntentId,
    /// `None` for the initial SUBMITTED state.
    pub from: Option<IntentState>,
    pub to: IntentState,
}

pub type TransitionObserver = Arc<dyn Fn(Transition) + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Health {
    pub intents_live: usize,
    pub rules_installed: usize,
}

#[derive(Clone, Default)]
pub struct ControllerConfig {
    /// Maximum number of live intents; unbounded when `None`.
    pub intent_capacity: Option<usize>,
    pub fabric_limits: FabricLimits,
    pub observer: Option<TransitionObserver>,
}

/// Intent service bound to one topology and its fabric.
///
/// `submit` drives an intent synchronously to INSTALLED or FAILED. Writers
/// serialize on the store lock (and the fabric's own writer lock beneath
/// it); readers see a consistent snapshot.
pub struct Controller {
    topology: Arc<Topology>,
    fabric: Fabric,
    store: RwLock<IntentStore>,
    next_id: AtomicU64,
    rule_ids: RuleIdGen,
    observer: Option<TransitionObserver>,
}

impl std::fmt::Debug for Controller {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Controller")
            .field("devices", &self.topology.device_count())
            .field("health", &self.health())
            .finish_non_exhaustive()
    }
}

impl Controller {
    pub fn new(topology: Arc<Topology>, config: ControllerConfig) -> Self {
        Self {
            fabric: Fabric::with_limits(topology.clone(), config.fabric_limits),
            topology,
            store: RwLock::new(IntentStore::new(config.intent_capacity)),
            next_id: AtomicU64::new(1),
            rule_ids: RuleIdGen::new(),
            observer: config.observer,
        }
    }

    pub fn with_topology(topology: Topology) -> Self {
        Self::new(Arc::new(topology), ControllerConfig::default())
    }

    pub fn topology(&self) -> &Arc<Topology> {
        &self.topology
    }

    pub fn fabric(&self) -> &Fabric {
        &self.fabric
    }

    pub fn capacity(&self) -> Option<usize> {
        self.store.read().unwrap().capacity()
    }

    /// Validate, store, compile and install one intent.
    ///
    /// Validation and capacity problems reject the request outright. A
    /// compilation or installation failure still stores the intent, in
    /// FAILED with a reason.
    pub fn submit(&self, request: IntentRequest) -> Result<Submitted, SubmitError> {
        request.validate(&self.topology)?;
        let mut store = self.store.write().unwrap();
        self.submit_locked(&mut store, request, None)
    }

    fn submit_locked(
        &self,
        store: &mut IntentStore,
        request: IntentRequest,
        parent: Option<IntentId>,
    ) -> Result<Submitted, SubmitError> {
        let slots = match request.kind {
            IntentKind::HostToHost { .. } => 3,
            _ => 1,
        };
        if !store.has_room(slots) {
            return Err(SubmitError::Capacity {
                capacity: store.capacity().unwrap_or(usize::MAX),
            });
        }

        let id = IntentId(self.next_id.fetch_add(1, Ordering::Relaxed));
        let mut intent = Intent::new(id, request);
        intent.parent = parent;
        store.insert(intent);
        self.notify(Transition {
            id,
            from: None,
            to: IntentState::Submitted,
        });
        self.advance(store, id, IntentState::Compiling);

        if matches!(store.get(id).unwrap().kind, IntentKind::HostToHost { .. }) {
            self.install_host_to_host(store, id);
        } else {
            self.install_rules(store, id);
        }
        let intent = store.get(id).unwrap();
        Ok(Submitted {
            id,
            state: intent.state,
            rule_count: intent.rule_count,
        })
    }

    fn install_rules(&self, store: &mut IntentStore, id: IntentId) {
        let rules = match compile_rules(&self.topology, store.get(id).unwrap(), &self.rule_ids) {
            Ok(rules) => rules,
            Err(err) => return self.fail(store, id, err.to_string()),
        };
        self.advance(store, id, IntentState::Installing);
        match self.fabric.install_rules(rules.clone()) {
            Ok(count) => {
                store.get_mut(id).unwrap().rule_count = count;
                store.attach(InstallableIntent { owner: id, rules });
                self.advance(store, id, IntentState::Installed);
            }
            Err(err) => self.fail(store, id, err.to_string()),
        }
    }

    /// Expand into two point-to-point intents. Either both install or the
    /// host-to-host intent fails and any installed half is withdrawn.
    fn install_host_to_host(&self, store: &mut IntentStore, id: IntentId) {
        let requests = match host_to_host_requests(&self.topology, &store.get(id).unwrap().request()) {
            Ok(requests) => requests,
            Err(err) => return self.fail(store, id, err.to_string()),
        };
        let mut children = Vec::with_capacity(2);
        for request in requests {
            // room for both halves was reserved before the parent was stored
            let submitted = self
                .submit_locked(store, request, Some(id))
                .expect("capacity reserved for host-to-host halves");
            children.push(submitted);
        }
        store.get_mut(id).unwrap().children = children.iter().map(|c| c.id).collect();

        if let Some(bad) = children.iter().find(|c| c.state != IntentState::Installed) {
            let reason = store
                .get(bad.id)
                .and_then(|i| i.reason.clone())
                .unwrap_or_default();
            for child in children.iter().filter(|c| c.state == IntentState::Installed) {
                self.retire(store, child.id);
            }
            return self.fail(store, id, format!("intent {} failed: {reason}", bad.id));
        }
        self.advance(store, id, IntentState::Installing);
        store.get_mut(id).unwrap().rule_count = children.iter().map(|c| c.rule_count).sum();
        self.advance(store, id, IntentState::Installed);
    }

    fn advance(&self, store: &mut IntentStore, id: IntentId, next: IntentState) {
        let prev = store
            .set_state(id, next)
            .unwrap_or_else(|| panic!("illegal transition of intent {id} to {next}"));
        self.notify(Transition {
            id,
            from: Some(prev),
            to: next,
        });
    }

    fn fail(&self, store: &mut IntentStore, id: IntentId, reason: String) {
        store.get_mut(id).unwrap().reason = Some(reason);
        self.advance(store, id, IntentState::Failed);
    }

    /// Remove an installed intent's rules and mark it withdrawn.
    fn retire(&self, store: &mut IntentStore, id: IntentId) -> usize {
        let removed = self.fabric.remove_rules(id);
        store.detach(id);
        self.advance(store, id, IntentState::Withdrawn);
        removed
    }

    fn notify(&self, transition: Transition) {
        if let Some(observer) = &self.observer {
            observer(transition);
        }
    }

    /// Withdraw an INSTALLED intent, removing its rules from the fabric.
    /// Returns the number of rules removed.
    pub fn withdraw(&self, id: IntentId) -> Result<usize, IntentError> {
        let mut store = self.store.write().unwrap();
        let intent = store.get(id).ok_or(IntentError::NotFound(id))?;
        if intent.state != IntentState::Installed {
            return Err(IntentError::IllegalState { id, state: intent.state });
        }
        if let Some(parent) = intent.parent {
            if store.get(parent).is_some_and(|p| p.state == IntentState::Installed) {
                return Err(IntentError::OwnedByParent { id, parent });
            }
        }
        let children = intent.children.clone();
        let mut removed = 0;
        for child in children {
            if store.get(child).is_some_and(|c| c.state == IntentState::Installed) {
                removed += self.retire(&mut store, child);
            }
        }
        Ok(removed + self.retire(&mut store, id))
    }

    pub fn get(&self, id: IntentId) -> Result<Intent, IntentError> {
        self.store
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or(IntentError::NotFound(id))
    }

    pub fn installable(&self, id: IntentId) -> Option<InstallableIntent> {
        self.store.read().unwrap().installable(id).cloned()
    }

    /// Every stored intent, withdrawn and failed ones included, by id.
    pub fn list(&self) -> Vec<Intent> {
        self.store.read().unwrap().iter().cloned().collect()
    }

    /// Number of intents caught between submission and a settled state.
    pub fn transient_count(&self) -> usize {
        self.store
            .read()
            .unwrap()
            .iter()
            .filter(|i| i.state.is_transient())
            .count()
    }

    pub fn health(&self) -> Health {
        let store = self.store.read().unwrap();
        Health {
            intents_live: store.live_count(),
            rules_installed: self.fabric.rule_count(),
        }
    }

    /// Withdraw every installed intent and forget all intents. Intent ids
    /// keep increasing across purges. Returns how many were withdrawn.
    pub fn purge(&self) -> usize {
        let mut store = self.store.write().unwrap();
        let installed: Vec<_> = store
            .iter()
            .filter(|i| i.state == IntentState::Installed)
            .map(|i| i.id)
            .collect();
        for &id in &installed {
            self.retire(&mut store, id);
        }
        self.fabric.clear();
        store.clear();
        installed.len()
    }
}
