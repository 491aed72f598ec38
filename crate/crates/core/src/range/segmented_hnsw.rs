//! Unified HNSW over `S` attribute segments whose layer-0 edges carry a
//! mask of the contiguous segment ranges they were selected in.
//!
//! Every contiguous range of segments gets its own HNSW build; the layer-0
//! edges of all builds merge into one graph, and an edge's mask bit `r` is
//! set iff the build for range `r` kept it. Queries dispatch on exact
//! selectivity: sparse ranges are scanned, mid-sized ones walk the edges
//! valid for the smallest covering segment range, and wide ones post-filter
//! the full-range graph.

use super::{rank_distance, ranks_to_result, scan_ranks, RangeSearch};
use crate::base::{Hnsw, HnswParams};
use crate::distance::Probe;
use crate::error::{Error, Result};
use crate::filter::oversampled_k;
use crate::graph::{AdjacencyView, BeamSearch, FilterMode};
use crate::space::Subset;
use crate::types::{AttributedDataset, Neighbor, SearchResult};

/// Largest segment count whose ranges fit a 128-bit mask.
pub const MAX_SEGMENTS: usize = 15;

const POST_FILTER_CAP: usize = 10_000;
const POST_FILTER_RETRIES: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentedHnswParams {
    pub segments: usize,
    pub m: usize,
    pub ef_construction: usize,
    pub sel_low: f64,
    pub sel_high: f64,
    pub seed: u64,
}

impl SegmentedHnswParams {
    pub fn new(m: usize, ef_construction: usize) -> Self {
        Self {
            segments: 8,
            m,
            ef_construction,
            sel_low: 0.005,
            sel_high: 0.5,
            seed: 42,
        }
    }
}

/// The path a query took.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dispatch {
    Scan,
    Joint { range: usize },
    PostFilter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentedHnsw {
    pub(crate) params: SegmentedHnswParams,
    /// `bounds[j]` is the first rank of segment `j`; `bounds[S] = n`.
    pub(crate) bounds: Vec<u32>,
    /// Per rank: `(target rank, mask)`.
    pub(crate) edges: Vec<Vec<(u32, u128)>>,
    /// Per segment range: its HNSW with layer 0 emptied, in local ids.
    pub(crate) uppers: Vec<Hnsw>,
}

/// Layer-0 edges valid for one segment range.
struct MaskView<'a> {
    edges: &'a [Vec<(u32, u128)>],
    bit: u128,
}

impl AdjacencyView for MaskView<'_> {
    #[inline]
    fn neighbors(&self, node: u32, out: &mut Vec<u32>) {
        out.extend(self.edges[node as usize].iter().filter(|e| e.1 & self.bit != 0).map(|e| e.0));
    }

    fn filters_edges(&self) -> bool {
        true
    }
}

impl SegmentedHnsw {
    pub fn build(ds: &AttributedDataset, params: SegmentedHnswParams) -> Result<Self> {
        let n = ds.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if params.segments == 0 || params.segments > MAX_SEGMENTS {
            return Err(Error::config(format!("segment count must be in 1..={MAX_SEGMENTS}")));
        }
        if !(0.0..=1.0).contains(&params.sel_low) || params.sel_low > params.sel_high {
            return Err(Error::config("need 0 <= sel_low <= sel_high"));
        }
        let s = params.segments.min(n);
        let bounds: Vec<u32> = (0..=s).map(|j| (j * n / s) as u32).collect();
        let mut edges: Vec<Vec<(u32, u128)>> = vec![Vec::new(); n];
        let mut uppers = Vec::with_capacity(s * (s + 1) / 2);
        for a in 0..s {
            for b in a..s {
                let r = uppers.len();
                let (lo, hi) = (bounds[a], bounds[b + 1]);
                let ids = &ds.attr_rank()[lo as usize..hi as usize];
                let hp = HnswParams::new(params.m, params.ef_construction).with_seed(params.seed ^ r as u64);
                let mut h = Hnsw::build(&Subset::new(ds.vectors(), ids), hp)?;
                for (local, list) in h.layer0.iter_mut().enumerate() {
                    let from = &mut edges[lo as usize + local];
                    for &t in list.iter() {
                        let target = lo + t;
                        match from.iter_mut().find(|e| e.0 == target) {
                            Some(e) => e.1 |= 1 << r,
                            None => from.push((target, 1 << r)),
                        }
                    }
                    *list = Vec::new();
                }
                uppers.push(h);
            }
        }
        Ok(Self {
            params: SegmentedHnswParams { segments: s, ..params },
            bounds,
            edges,
            uppers,
        })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn params(&self) -> &SegmentedHnswParams {
        &self.params
    }

    pub fn segments(&self) -> usize {
        self.params.segments
    }

    pub fn set_thresholds(&mut self, sel_low: f64, sel_high: f64) {
        self.params.sel_low = sel_low;
        self.params.sel_high = sel_high;
    }

    pub fn segment_of(&self, rank: u32) -> usize {
        self.bounds.partition_point(|&b| b <= rank) - 1
    }

    /// Segment range `[a, b]` of mask bit `r`.
    pub fn range_of(&self, r: usize) -> (usize, usize) {
        let s = self.segments();
        let mut r = r;
        for a in 0..s {
            let width = s - a;
            if r < width {
                return (a, a + r);
            }
            r -= width;
        }
        panic!("mask bit {r} out of range");
    }

    /// Mask bit of the smallest segment range holding ranks `[l, u]`.
    pub fn covering_range(&self, l: u32, u: u32) -> usize {
        let (a, b) = (self.segment_of(l), self.segment_of(u));
        let s = self.segments();
        (0..a).map(|x| s - x).sum::<usize>() + (b - a)
    }

    pub fn edges(&self, rank: u32) -> &[(u32, u128)] {
        &self.edges[rank as usize]
    }

    /// Edges with a mask bit whose segment range misses an endpoint.
    pub fn mask_violations(&self) -> usize {
        let mut bad = 0;
        for (from, list) in self.edges.iter().enumerate() {
            let sf = self.segment_of(from as u32);
            for &(to, mask) in list {
                let st = self.segment_of(to);
                for r in (0..128).filter(|r| mask >> r & 1 == 1) {
                    let (a, b) = self.range_of(r);
                    if !(a <= sf && sf <= b && a <= st && st <= b) {
                        bad += 1;
                    }
                }
            }
        }
        bad
    }

    pub fn dispatch_for(&self, l: usize, u: usize) -> Dispatch {
        let sel = (u - l + 1) as f64 / self.len() as f64;
        if sel < self.params.sel_low {
            Dispatch::Scan
        } else if sel <= self.params.sel_high {
            Dispatch::Joint {
                range: self.covering_range(l as u32, u as u32),
            }
        } else {
            Dispatch::PostFilter
        }
    }

    pub fn memory_bytes(&self) -> usize {
        self.edges
            .iter()
            .map(|l| l.capacity() * std::mem::size_of::<(u32, u128)>() + std::mem::size_of::<Vec<(u32, u128)>>())
            .sum::<usize>()
            + self.uppers.iter().map(Hnsw::memory_bytes).sum::<usize>()
    }

    /// Upper-layer descent of range `r`, as a global rank.
    fn descend(&self, ds: &AttributedDataset, q: &[f32], r: usize, probe: &mut Probe) -> Result<Neighbor> {
        let lo = self.bounds[self.range_of(r).0];
        let local = self.uppers[r].descend_scored(|v| rank_distance(ds, q, lo + v), probe)?;
        Ok(Neighbor::new(lo + local.id, local.distance))
    }

    fn joint(&self, ds: &AttributedDataset, q: &[f32], l: u32, u: u32, r: usize, ef: usize, probe: &mut Probe) -> Result<Vec<Neighbor>> {
        let entry = self.descend(ds, q, r, probe)?;
        let mid = l + (u - l) / 2;
        let mut seeds = vec![entry];
        if entry.id != mid {
            seeds.push(Neighbor::new(mid, probe.distance(mid, || rank_distance(ds, q, mid))));
        }
        let in_range = move |v: u32| l <= v && v <= u;
        let view = MaskView {
            edges: &self.edges,
            bit: 1 << r,
        };
        let out = BeamSearch::new(ef)
            .filter(&in_range, FilterMode::Route)
            .run_from(&view, self.len(), &seeds, |v| rank_distance(ds, q, v), probe)?;
        Ok(out.results)
    }

    fn post_filter(&self, ds: &AttributedDataset, q: &[f32], l: u32, u: u32, ef: usize, k: usize, probe: &mut Probe) -> Result<(Vec<Neighbor>, bool)> {
        let full = self.covering_range(0, self.len() as u32 - 1);
        let matched = (u - l + 1) as usize;
        let want = k.min(matched);
        let k_over = oversampled_k(k, matched as f64 / self.len() as f64, POST_FILTER_CAP.min(self.len()));
        let mut ef = ef.max(k_over);
        let view = MaskView {
            edges: &self.edges,
            bit: 1 << full,
        };
        let mut hits = Vec::new();
        let entry = self.descend(ds, q, full, probe)?;
        for attempt in 0..=POST_FILTER_RETRIES {
            if attempt > 0 {
                ef *= 2;
            }
            let out = BeamSearch::new(ef).run_from(&view, self.len(), &[entry], |v| rank_distance(ds, q, v), probe)?;
            hits = out.results.into_iter().filter(|h| l <= h.id && h.id <= u).collect();
            if hits.len() >= want || ef >= self.len() {
                break;
            }
        }
        let partial = hits.len() < want;
        Ok((hits, partial))
    }
}

impl RangeSearch for SegmentedHnsw {
    fn search_ranks(
        &self,
        ds: &AttributedDataset,
        q: &[f32],
        l: usize,
        u: usize,
        ef: usize,
        k: usize,
        probe: &mut Probe,
    ) -> Result<SearchResult> {
        if l > u || u >= self.len() {
            return Err(Error::NoEntry);
        }
        let ef = ef.max(k);
        match self.dispatch_for(l, u) {
            Dispatch::Scan => Ok(ranks_to_result(ds, scan_ranks(ds, q, l, u, probe), k, probe)),
            Dispatch::Joint { range } => {
                let hits = self.joint(ds, q, l as u32, u as u32, range, ef, probe)?;
                Ok(ranks_to_result(ds, hits, k, probe))
            }
            Dispatch::PostFilter => {
                let (hits, partial) = self.post_filter(ds, q, l as u32, u as u32, ef, k, probe)?;
                let mut res = ranks_to_result(ds, hits, k, probe);
                res.partial = partial;
                Ok(res)
            }
        }
    }
}
