//! Numeric range filtering.
//!
//! All three indexes number their nodes by attribute rank, so a value range
//! `[lo, hi]` becomes a contiguous rank range `[l, u]` and every node in it
//! satisfies the predicate. Results are mapped back to dataset ids.

mod segment_tree;
mod segmented_edge;
mod segmented_hnsw;

pub use segment_tree::{Piece, SegmentTree, SegmentTreeParams, TreeMode, TreeNode};
pub use segmented_edge::{LogSegment, SegEdge, SegmentedEdgeGraph, SegmentedEdgeParams, SegmentedView};
pub use segmented_hnsw::{Dispatch, SegmentedHnsw, SegmentedHnswParams, MAX_SEGMENTS};

use crate::distance::{l2, Probe};
use crate::error::Result;
use crate::filter::check_dim;
use crate::space::Subset;
use crate::types::{AttributedDataset, Neighbor, SearchResult};

/// Search over attribute-rank ranges.
pub trait RangeSearch: Sync {
    /// `l <= u < n`; results lie in ranks `[l, u]` and carry dataset ids.
    fn search_ranks(
        &self,
        ds: &AttributedDataset,
        q: &[f32],
        l: usize,
        u: usize,
        ef: usize,
        k: usize,
        probe: &mut Probe,
    ) -> Result<SearchResult>;

    /// Value-range search; an empty rank span yields an empty result.
    fn search_range(
        &self,
        ds: &AttributedDataset,
        q: &[f32],
        lo: i64,
        hi: i64,
        ef: usize,
        k: usize,
        probe: &mut Probe,
    ) -> Result<SearchResult> {
        check_dim(ds.vectors(), q)?;
        match ds.rank_range(lo, hi) {
            Some((l, u)) => self.search_ranks(ds, q, l, u, ef, k, probe),
            None => Ok(SearchResult::empty(probe)),
        }
    }
}

/// Nodes are ranks; node `r` is the vector of `attr_rank[r]`.
pub(crate) fn rank_space(ds: &AttributedDataset) -> Subset<'_> {
    Subset::new(ds.vectors(), ds.attr_rank())
}

#[inline]
pub(crate) fn rank_distance(ds: &AttributedDataset, q: &[f32], rank: u32) -> f64 {
    l2(q, ds.vector(ds.id_at_rank(rank as usize)))
}

/// Exact scan of ranks `[l, u]`.
pub(crate) fn scan_ranks(ds: &AttributedDataset, q: &[f32], l: usize, u: usize, probe: &mut Probe) -> Vec<Neighbor> {
    (l as u32..=u as u32)
        .map(|r| Neighbor::new(r, probe.distance(r, || rank_distance(ds, q, r))))
        .collect()
}

/// Rank-keyed hits to id-keyed, sorted top-`k`.
pub(crate) fn ranks_to_result(ds: &AttributedDataset, hits: Vec<Neighbor>, k: usize, probe: &Probe) -> SearchResult {
    let mapped = hits
        .into_iter()
        .map(|h| Neighbor::new(ds.id_at_rank(h.id as usize), h.distance))
        .collect();
    SearchResult::from_hits(mapped, k, probe)
}
