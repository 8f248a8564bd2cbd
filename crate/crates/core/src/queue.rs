//! Priority-queue entries and the epoch-stamped visited set.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

/// A node with its score against the current query. Orders by score, then by
/// node id, so ties resolve toward the lower id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Candidate {
    pub score: f32,
    pub id: u32,
}

impl Candidate {
    #[inline]
    pub fn new(score: f32, id: u32) -> Self {
        Self { score, id }
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then(self.id.cmp(&other.id))
    }
}

pub(crate) struct VisitedSet {
    marks: Vec<u32>,
    epoch: u32,
}

impl VisitedSet {
    pub fn new(n: usize) -> Self {
        Self {
            marks: vec![0; n],
            epoch: 1,
        }
    }

    pub fn clear(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.marks.fill(0);
            self.epoch = 1;
        }
    }

    /// Marks `id`; returns false when it was already marked.
    #[inline]
    pub fn insert(&mut self, id: u32) -> bool {
        let slot = &mut self.marks[id as usize];
        if *slot == self.epoch {
            false
        } else {
            *slot = self.epoch;
            true
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BinaryHeap;
    use core::cmp::Reverse;

    #[test]
    fn heap_orders_by_score_then_id() {
        let mut heap = BinaryHeap::new();
        heap.push(Reverse(Candidate::new(1.0, 5)));
        heap.push(Reverse(Candidate::new(1.0, 2)));
        heap.push(Reverse(Candidate::new(0.5, 9)));
        let order: Vec<u32> = core::iter::from_fn(|| heap.pop().map(|c| c.0.id)).collect();
        assert_eq!(order, vec![9, 2, 5]);
    }

    #[test]
    fn visited_epochs() {
        let mut v = VisitedSet::new(4);
        assert!(v.insert(1));
        assert!(!v.insert(1));
        v.clear();
        assert!(v.insert(1));
    }
}
