//! Dynamic weighted sampling over a fixed number of slots.

/// Sum tree over nonnegative slot weights.
///
/// Leaves hold the weights; every internal node is recomputed from its two
/// children on update, so no rounding error accumulates across updates.
/// Update and sampling are `O(log n)`.
#[derive(Debug, Clone)]
pub struct SumTree {
    len: usize,
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(len: usize) -> Self {
        let leaves = len.max(1).next_power_of_two();
        SumTree { len, leaves, nodes: vec![0.0; 2 * leaves] }
    }

    pub fn from_weights(weights: &[f64]) -> Self {
        let mut tree = SumTree::new(weights.len());
        tree.nodes[tree.leaves..tree.leaves + weights.len()].copy_from_slice(weights);
        for k in (1..tree.leaves).rev() {
            tree.nodes[k] = tree.nodes[2 * k] + tree.nodes[2 * k + 1];
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, slot: usize) -> f64 {
        self.nodes[self.leaves + slot]
    }

    pub fn set(&mut self, slot: usize, weight: f64) {
        debug_assert!(slot < self.len);
        debug_assert!(weight >= 0.0, "negative weight {weight} at slot {slot}");
        let mut k = self.leaves + slot;
        self.nodes[k] = weight;
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    /// Slot whose cumulative interval contains `target`, where
    /// `0 <= target < total()`. Never returns a zero-weight slot while the
    /// total is positive.
    pub fn find(&self, mut target: f64) -> usize {
        let mut k = 1;
        while k < self.leaves {
            let left = self.nodes[2 * k];
            if (target < left && left > 0.0) || self.nodes[2 * k + 1] <= 0.0 {
                k *= 2;
            } else {
                target -= left;
                k = 2 * k + 1;
            }
        }
        k - self.leaves
    }

    /// Draws a slot with probability proportional to its weight.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.find(u * self.total())
    }
}
