// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};

use super::{InstallableIntent, Intent, IntentState};
use crate::ids::IntentId;

/// Intents by id plus their compiled rule sets.
///
/// Failed and withdrawn intents stay queryable but do not count toward the
/// live total that `capacity` bounds.
#[derive(Debug, Default)]
pub struct IntentStore {
    intents: BTreeMap<IntentId, Intent>,
    installables: HashMap<IntentId, InstallableIntent>,
    capacity: Option<usize>,
    live: usize,
}

impl IntentStore {
    pub fn new(capacity: Option<usize>) -> Self {
        Self {
            capacity,
            ..Default::default()
        }
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn live_count(&self) -> usize {
        self.live
    }

    pub fn len(&self) -> usize {
        self.intents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intents.is_empty()
    }

    /// Whether `slots` more live intents fit.
    pub fn has_room(&self, slots: usize) -> bool {
        self.capacity.is_none_or(|cap| self.live + slots <= cap)
    }

    pub fn get(&self, id: IntentId) -> Option<&Intent> {
        self.intents.get(&id)
    }

    pub fn installable(&self, id: IntentId) -> Option<&InstallableIntent> {
        self.installables.get(&id)
    }

    /// All intents in id order.
    pub fn iter(&self) -> impl Iterator<Item = &Intent> + '_ {
        self.intents.values()
    }

    pub(crate) fn insert(&mut self, intent: Intent) {
        if !intent.state.is_terminal() {
            self.live += 1;
        }
        self.intents.insert(intent.id, intent);
    }

    pub(crate) fn get_mut(&mut self, id: IntentId) -> Option<&mut Intent> {
        self.intents.get_mut(&id)
    }

    /// Move `id` to `next`, keeping the live count in step. Returns the
    /// previous state, or `None` when the transition is not legal.
    pub(crate) fn set_state(&mut self, id: IntentId, next: IntentState) -> Option<IntentState> {
        let intent = self.intents.get_mut(&id)?;
        let prev = intent.state;
        if !prev.can_transition_to(next) {
            return None;
        }
        intent.state = next;
        if next.is_terminal() {
            self.live -= 1;
        }
        Some(prev)
    }

    pub(crate) fn attach(&mut self, installable: InstallableIntent) {
        debug_assert!(self.intents.contains_key(&installable.owner));
        self.installables.insert(installable.owner, installable);
    }

    pub(crate) fn detach(&mut self, id: IntentId) -> Option<InstallableIntent> {
        self.installables.remove(&id)
    }

    pub(crate) fn clear(&mut self) {
        self.intents.clear();
        self.installables.clear();
        self.live = 0;
    }
}
