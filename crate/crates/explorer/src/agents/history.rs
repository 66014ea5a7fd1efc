//! Rolling five-step input window shared by every learner.

use crate::neural::HISTORY_LEN;
use std::collections::VecDeque;

/// The last five (state, map) inputs, zero-padded at the start of a
/// phase so the window is always full.
#[derive(Clone, Debug)]
pub struct HistoryWindow {
    state_dim: usize,
    map_dim: usize,
    states: VecDeque<Vec<f64>>,
    maps: VecDeque<Vec<f64>>,
}

impl HistoryWindow {
    pub fn new(state_dim: usize, map_dim: usize) -> Self {
        let mut states = VecDeque::with_capacity(HISTORY_LEN);
        let mut maps = VecDeque::with_capacity(HISTORY_LEN);
        for _ in 0..HISTORY_LEN {
            states.push_back(vec![0.0; state_dim]);
            maps.push_back(vec![0.0; map_dim]);
        }
        HistoryWindow {
            state_dim,
            map_dim,
            states,
            maps,
        }
    }

    /// Appends the newest input, dropping the oldest.
    pub fn push(&mut self, state: Vec<f64>, map: Vec<f64>) {
        assert_eq!(state.len(), self.state_dim);
        assert_eq!(map.len(), self.map_dim);
        self.states.pop_front();
        self.maps.pop_front();
        self.states.push_back(state);
        self.maps.push_back(map);
    }

    /// The window as owned vectors, oldest first — the exact network input.
    pub fn snapshot(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        (
            self.states.iter().cloned().collect(),
            self.maps.iter().cloned().collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_zero_padded_and_rolls() {
        let mut h = HistoryWindow::new(2, 3);
        let (s, m) = h.snapshot();
        assert_eq!(s.len(), 5);
        assert!(s.iter().all(|r| r == &vec![0.0, 0.0]));
        assert!(m.iter().all(|r| r == &vec![0.0, 0.0, 0.0]));

        for i in 0..7 {
            h.push(vec![i as f64, 0.0], vec![i as f64; 3]);
        }
        let (s, m) = h.snapshot();
        // After 7 pushes the window holds pushes 2..=6, oldest first.
        let firsts: Vec<f64> = s.iter().map(|r| r[0]).collect();
        assert_eq!(firsts, vec![2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(m[0], vec![2.0; 3]);
    }

    #[test]
    fn shift_by_one_consistency_between_snapshots() {
        let mut h = HistoryWindow::new(1, 1);
        for i in 0..5 {
            h.push(vec![i as f64], vec![0.0]);
        }
        let (before, _) = h.snapshot();
        h.push(vec![9.0], vec![0.0]);
        let (after, _) = h.snapshot();
        assert_eq!(&after[..4], &before[1..]);
        assert_eq!(after[4], vec![9.0]);
    }
}
