// Per-state indexed binary max-heaps over actions.
//
// The top of each heap is the greedy action: largest Q, lowest index on
// ties. Changing one entry repairs the heap in O(log A).

use alloc::vec::Vec;

use crate::mdp::ActionValues;

#[derive(Debug, Clone)]
pub(crate) struct ActionHeaps {
    num_actions: usize,
    // heap[s * A + i] is the action at heap slot i of state s
    heap: Vec<usize>,
    // pos[s * A + a] is the slot holding action a
    pos: Vec<usize>,
}

#[inline]
fn ranks_above(q: &[f64], a: usize, b: usize) -> bool {
    q[a] > q[b] || (q[a] == q[b] && a < b)
}

impl ActionHeaps {
    pub(crate) fn new(values: &ActionValues) -> Self {
        let (ns, na) = (values.num_states(), values.num_actions());
        let mut heaps = Self {
            num_actions: na,
            heap: (0..ns).flat_map(|_| 0..na).collect(),
            pos: (0..ns).flat_map(|_| 0..na).collect(),
        };
        for s in 0..ns {
            heaps.rebuild(values, s);
        }
        heaps
    }

    #[inline]
    pub(crate) fn top(&self, s: usize) -> usize {
        self.heap[s * self.num_actions]
    }

    pub(crate) fn rebuild(&mut self, values: &ActionValues, s: usize) {
        let q = values.row(s);
        for i in (0..self.num_actions / 2).rev() {
            self.sift_down(q, s, i);
        }
    }

    /// Restores the heap property after `Q(s, a)` changed.
    pub(crate) fn update(&mut self, values: &ActionValues, s: usize, a: usize) {
        let q = values.row(s);
        let slot = self.pos[s * self.num_actions + a];
        let slot = self.sift_up(q, s, slot);
        self.sift_down(q, s, slot);
    }

    fn swap(&mut self, s: usize, i: usize, j: usize) {
        let base = s * self.num_actions;
        self.heap.swap(base + i, base + j);
        self.pos[base + self.heap[base + i]] = i;
        self.pos[base + self.heap[base + j]] = j;
    }

    fn sift_up(&mut self, q: &[f64], s: usize, mut i: usize) -> usize {
        let base = s * self.num_actions;
        while i > 0 {
            let parent = (i - 1) / 2;
            if ranks_above(q, self.heap[base + i], self.heap[base + parent]) {
                self.swap(s, i, parent);
                i = parent;
            } else {
                break;
            }
        }
        i
    }

    fn sift_down(&mut self, q: &[f64], s: usize, mut i: usize) {
        let base = s * self.num_actions;
        let n = self.num_actions;
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut best = i;
            if l < n && ranks_above(q, self.heap[base + l], self.heap[base + best]) {
                best = l;
            }
            if r < n && ranks_above(q, self.heap[base + r], self.heap[base + best]) {
                best = r;
            }
            if best == i {
                return;
            }
            self.swap(s, i, best);
            i = best;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fresh_heap_picks_lowest_index() {
        let q = ActionValues::constant(2, 5, 3.0);
        let h = ActionHeaps::new(&q);
        assert_eq!(h.top(0), 0);
        assert_eq!(h.top(1), 0);
    }

    #[test]
    fn lowering_top_moves_to_next() {
        let mut q = ActionValues::constant(1, 3, 20.0);
        let mut h = ActionHeaps::new(&q);
        q.set(0, 0, 19.0);
        h.update(&q, 0, 0);
        assert_eq!(h.top(0), 1);
    }

    proptest! {
        #[test]
        fn matches_linear_scan(
            na in 1usize..9,
            updates in prop::collection::vec((0usize..3, 0usize..8, 0u8..6), 1..200),
        ) {
            let mut q = ActionValues::constant(3, na, 2.0);
            let mut h = ActionHeaps::new(&q);
            for (s, a, level) in updates {
                let a = a % na;
                // coarse levels so ties are common
                q.set(s, a, level as f64 * 0.5);
                h.update(&q, s, a);
                for st in 0..3 {
                    prop_assert_eq!(h.top(st), q.greedy_action(st));
                }
            }
        }
    }
}
