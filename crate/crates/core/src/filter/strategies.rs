//! Where the predicate is applied relative to the similarity search:
//! before it (exact scan of members), after it (oversampled unfiltered
//! search), or during it (members-only result heap).

use super::MembershipBitmap;
use crate::base::{Hnsw, Vamana};
use crate::distance::{l2, Probe};
use crate::error::{Error, Result};
use crate::graph::FilterMode;
use crate::space::VectorSpace;
use crate::types::{Neighbor, SearchResult, Vectors};

/// A graph index searchable under an optional node filter.
pub trait GraphSearch: Sync {
    fn node_count(&self) -> usize;

    fn search_graph(
        &self,
        vectors: &Vectors,
        q: &[f32],
        ef: usize,
        k: usize,
        filter: Option<&(dyn Fn(u32) -> bool + Sync)>,
        mode: FilterMode,
        probe: &mut Probe,
    ) -> Result<Vec<Neighbor>>;
}

impl GraphSearch for Hnsw {
    fn node_count(&self) -> usize {
        self.len()
    }

    fn search_graph(
        &self,
        vectors: &Vectors,
        q: &[f32],
        ef: usize,
        k: usize,
        filter: Option<&(dyn Fn(u32) -> bool + Sync)>,
        mode: FilterMode,
        probe: &mut Probe,
    ) -> Result<Vec<Neighbor>> {
        check_dim(vectors, q)?;
        self.search(|i| vectors.query_distance(q, i), ef, k, filter, mode, probe)
    }
}

impl GraphSearch for Vamana {
    fn node_count(&self) -> usize {
        self.adjacency().len()
    }

    fn search_graph(
        &self,
        vectors: &Vectors,
        q: &[f32],
        ef: usize,
        k: usize,
        filter: Option<&(dyn Fn(u32) -> bool + Sync)>,
        mode: FilterMode,
        probe: &mut Probe,
    ) -> Result<Vec<Neighbor>> {
        check_dim(vectors, q)?;
        let mut search = crate::graph::BeamSearch::new(ef.max(k));
        if let Some(f) = filter {
            search = search.filter(f, mode);
        }
        let mut out = search
            .run(self.adjacency(), self.node_count(), &[self.medoid()], |i| vectors.query_distance(q, i), probe)?
            .results;
        out.truncate(k);
        Ok(out)
    }
}

pub(crate) fn check_dim(vectors: &Vectors, q: &[f32]) -> Result<()> {
    if q.len() != vectors.dim() {
        return Err(Error::Dimension {
            expected: vectors.dim(),
            got: q.len(),
        });
    }
    Ok(())
}

/// Exact scan of the members; one comparison per member.
pub fn pre_filter_scan(vectors: &Vectors, bitmap: &MembershipBitmap, q: &[f32], k: usize, probe: &mut Probe) -> Result<SearchResult> {
    check_dim(vectors, q)?;
    let hits: Vec<Neighbor> = bitmap
        .iter()
        .map(|id| Neighbor::new(id, probe.distance(id, || l2(q, vectors.get(id as usize)))))
        .collect();
    Ok(SearchResult::from_hits(hits, k, probe))
}

/// Unfiltered search for `ceil(k / selectivity)` candidates, then drops
/// non-members. Shortfalls retry with doubled `ef` and candidate count, at
/// most three times.
pub fn post_filter_search<G: GraphSearch + ?Sized>(
    index: &G,
    vectors: &Vectors,
    bitmap: &MembershipBitmap,
    q: &[f32],
    ef: usize,
    k: usize,
    probe: &mut Probe,
) -> Result<SearchResult> {
    post_filter_with_cap(index, vectors, bitmap, q, ef, k, index.node_count(), probe)
}

/// Oversampling target for post-filtering: `ceil(k / sel)` capped at `cap`.
pub fn oversampled_k(k: usize, selectivity: f64, cap: usize) -> usize {
    if selectivity <= 0.0 {
        return 0;
    }
    ((k as f64 / selectivity).ceil() as usize).min(cap).max(k.min(cap))
}

pub(crate) fn post_filter_with_cap<G: GraphSearch + ?Sized>(
    index: &G,
    vectors: &Vectors,
    bitmap: &MembershipBitmap,
    q: &[f32],
    ef: usize,
    k: usize,
    cap: usize,
    probe: &mut Probe,
) -> Result<SearchResult> {
    let want = k.min(bitmap.count());
    if want == 0 {
        return Ok(SearchResult::empty(probe));
    }
    let cap = cap.min(index.node_count());
    let mut k_over = oversampled_k(k, bitmap.selectivity(), cap);
    let mut ef = ef.max(k_over);
    let mut hits = Vec::new();
    for attempt in 0..4 {
        if attempt > 0 {
            ef *= 2;
            k_over = (k_over * 2).min(cap);
        }
        hits = index
            .search_graph(vectors, q, ef, k_over, None, FilterMode::Strict, probe)?
            .into_iter()
            .filter(|n| bitmap.contains(n.id))
            .collect();
        if hits.len() >= want || ef >= index.node_count() {
            break;
        }
    }
    let mut res = SearchResult::from_hits(hits, k, probe);
    res.partial = res.len() < want;
    Ok(res)
}

/// Beam search in which only members enter the result heap.
pub fn joint_filter_search<G: GraphSearch + ?Sized>(
    index: &G,
    vectors: &Vectors,
    bitmap: &MembershipBitmap,
    q: &[f32],
    ef: usize,
    k: usize,
    mode: FilterMode,
    probe: &mut Probe,
) -> Result<SearchResult> {
    if bitmap.count() == 0 {
        return Ok(SearchResult::empty(probe));
    }
    let member = |id: u32| bitmap.contains(id);
    let hits = index.search_graph(vectors, q, ef, k, Some(&member), mode, probe)?;
    Ok(SearchResult::from_hits(hits, k, probe))
}
