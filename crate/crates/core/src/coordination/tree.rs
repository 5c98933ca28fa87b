use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::rng_from_seed;

/// Balanced binary tree over agents in heap layout: the node at position `i`
/// has children `2i + 1` and `2i + 2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeTopology {
    /// Agent index held by each tree position.
    order: Vec<usize>,
}

impl TreeTopology {
    /// Places `agents` (indices `0..agents`) on the tree in a random order.
    pub fn balanced(agents: usize, seed: u64) -> Self {
        let mut order: Vec<usize> = (0..agents).collect();
        order.shuffle(&mut rng_from_seed(seed));
        Self { order }
    }

    /// Tree with agents placed in the given order.
    pub fn from_order(order: Vec<usize>) -> Self {
        Self { order }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn agent_at(&self, position: usize) -> usize {
        self.order[position]
    }

    pub fn parent(&self, position: usize) -> Option<usize> {
        (position > 0).then(|| (position - 1) / 2)
    }

    pub fn children(&self, position: usize) -> impl Iterator<Item = usize> {
        let n = self.order.len();
        [2 * position + 1, 2 * position + 2]
            .into_iter()
            .filter(move |&c| c < n)
    }

    /// Number of levels.
    pub fn depth(&self) -> usize {
        let n = self.order.len();
        if n == 0 {
            0
        } else {
            (usize::BITS - n.leading_zeros()) as usize
        }
    }

    /// Positions ordered leaves-first: every child precedes its parent.
    pub fn bottom_up(&self) -> impl Iterator<Item = usize> {
        (0..self.order.len()).rev()
    }
}

/// Random balanced binary tree over the given agent ids, returned as the
/// ids in tree-position order.
pub fn build_balanced_tree(agent_ids: &[usize], seed: u64) -> Vec<usize> {
    let tree = TreeTopology::balanced(agent_ids.len(), seed);
    tree.order().iter().map(|&i| agent_ids[i]).collect()
}
