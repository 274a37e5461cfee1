//! Bounded FIFO experience replay.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// One logged interaction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition<S> {
    pub context: Vec<S>,
    pub action: usize,
    pub reward: S,
}

/// Bounded queue of transitions; pushes evict strictly oldest-first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayQueue<S> {
    items: VecDeque<Transition<S>>,
    capacity: usize,
}

impl<S> ReplayQueue<S> {
    pub fn new(capacity: usize) -> Self {
        Self {
            items: VecDeque::with_capacity(capacity.min(4096)),
            capacity,
        }
    }

    pub fn push(&mut self, transition: Transition<S>) {
        if self.capacity == 0 {
            return;
        }
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(transition);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition<S>> {
        self.items.iter()
    }
}
