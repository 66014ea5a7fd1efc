//! FIFO experience replay for the navigator.

use crate::rng::Rng;
use std::collections::VecDeque;

/// One stored experience: the five-step input windows before and after
/// the action, plus the action, reward, and terminal flag.
#[derive(Clone, Debug)]
pub struct Transition {
    pub states: Vec<Vec<f64>>,
    pub maps: Vec<Vec<f64>>,
    pub action: usize,
    pub reward: f64,
    pub next_states: Vec<Vec<f64>>,
    pub next_maps: Vec<Vec<f64>>,
    pub terminal: bool,
}

impl Transition {
    /// The successor windows must be the current ones shifted by one
    /// (the oldest row dropped, one new row appended).
    pub fn is_shift_consistent(&self) -> bool {
        self.next_states[..self.states.len() - 1] == self.states[1..]
            && self.next_maps[..self.maps.len() - 1] == self.maps[1..]
    }
}

/// Bounded FIFO buffer with uniform without-replacement batch sampling.
#[derive(Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        ReplayBuffer {
            capacity,
            items: VecDeque::with_capacity(capacity),
        }
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

    pub fn get(&self, i: usize) -> &Transition {
        &self.items[i]
    }

    /// Appends, evicting the oldest item when full.
    pub fn push(&mut self, t: Transition) {
        debug_assert!(t.is_shift_consistent());
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    /// `k` distinct uniformly-chosen indices (requires `k ≤ len`).
    pub fn sample_indices(&self, rng: &mut Rng, k: usize) -> Vec<usize> {
        assert!(k <= self.items.len());
        rng.choose_k(self.items.len(), k)
    }
}
