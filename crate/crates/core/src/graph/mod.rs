//! Graph kernel shared by every graph index: best-first beam search over an
//! abstract adjacency view, the neighbor pruning rules and entry-point
//! selection.

mod beam;
mod entry;
mod prune;
mod visited;

pub use beam::{beam_search, BeamOutput, BeamSearch, FilterMode};
pub use entry::{even_ranks, select_entry_points_even};
pub use prune::{
    prune_alpha, prune_keep_nearest, prune_label_covered, prune_rng, prune_two_hop, PruneContext,
    PruneStrategy,
};
pub use visited::{with_visited, VisitedSet};

/// Out-neighbors of a node under whatever validity rule the index applies.
pub trait AdjacencyView {
    /// Appends the valid out-neighbors of `node` to `out`.
    fn neighbors(&self, node: u32, out: &mut Vec<u32>);

    /// Whether `neighbors` does per-edge validity checks worth timing as
    /// edge filtering.
    fn filters_edges(&self) -> bool {
        false
    }
}

/// Plain adjacency lists.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Adjacency {
    pub lists: Vec<Vec<u32>>,
}

impl Adjacency {
    pub fn new(n: usize) -> Self {
        Self {
            lists: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    #[inline]
    pub fn get(&self, node: u32) -> &[u32] {
        &self.lists[node as usize]
    }

    pub fn max_degree(&self) -> usize {
        self.lists.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.lists.iter().map(Vec::len).sum()
    }

    /// Nodes reachable from `start`.
    pub fn reachable_from(&self, start: u32) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        if self.is_empty() {
            return seen;
        }
        let mut stack = vec![start];
        seen[start as usize] = true;
        while let Some(v) = stack.pop() {
            for &w in self.get(v) {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    pub fn memory_bytes(&self) -> usize {
        self.edge_count() * 4 + self.len() * std::mem::size_of::<Vec<u32>>()
    }
}

impl AdjacencyView for Adjacency {
    #[inline]
    fn neighbors(&self, node: u32, out: &mut Vec<u32>) {
        out.extend_from_slice(self.get(node));
    }
}

/// Every other node of `0..n`. Exhaustive exploration for tests and tiny
/// leaf pieces.
pub struct CompleteView(pub usize);

impl AdjacencyView for CompleteView {
    fn neighbors(&self, node: u32, out: &mut Vec<u32>) {
        out.extend((0..self.0 as u32).filter(|&v| v != node));
    }
}
