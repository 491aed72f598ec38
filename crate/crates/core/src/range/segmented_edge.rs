//! Graph whose edges are valid only for a band of query left bounds.
//!
//! Points are inserted in ascending rank. For node `i` the builder searches
//! the prefix graph once, then sweeps the left bound `l` upward: it prunes
//! the candidates of rank `>= l`, and since a selection only changes when
//! one of its own members drops out of range, it can jump straight to one
//! past the smallest selected rank. Each selected neighbor `s` for bounds
//! `[l, l']` yields the edge `i -> s` and the reverse edge `s -> i`, both
//! tagged with creation rank `i` and the left-bound interval `[l, l']`.
//!
//! A query over ranks `[l, u]` may follow an edge iff its creation rank is
//! at most `u` and `l` lies in its interval, which keeps both endpoints in
//! range.

use std::cell::Cell;
use std::collections::HashMap;

use super::{rank_distance, rank_space, ranks_to_result, RangeSearch};
use crate::distance::Probe;
use crate::error::Result;
use crate::graph::{even_ranks, AdjacencyView, BeamSearch, PruneContext, PruneStrategy};
use crate::space::Space;
use crate::types::{AttributedDataset, Neighbor, SearchResult};

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentedEdgeParams {
    pub m: usize,
    pub ef_construction: usize,
    /// Entry points per query.
    pub ep_count: usize,
    pub prune: PruneStrategy,
    /// Keep every per-node selection for replay checks.
    pub record_log: bool,
}

impl SegmentedEdgeParams {
    pub fn new(m: usize, ef_construction: usize) -> Self {
        Self {
            m,
            ef_construction,
            ep_count: 3,
            prune: PruneStrategy::RNG,
            record_log: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SegEdge {
    pub target: u32,
    /// Rank of the node whose insertion created the edge.
    pub group: u32,
    pub l_lo: u32,
    pub l_hi: u32,
}

/// Neighbors selected for node `i` for every left bound in `[l_lo, l_hi]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogSegment {
    pub l_lo: u32,
    pub l_hi: u32,
    /// Sorted ranks.
    pub neighbors: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentedEdgeGraph {
    pub(crate) params: SegmentedEdgeParams,
    /// Per rank, sorted by `group`.
    pub(crate) edges: Vec<Vec<SegEdge>>,
    pub(crate) log: Option<Vec<Vec<LogSegment>>>,
}

/// Valid out-edges for a query rank range.
pub struct SegmentedView<'a> {
    edges: &'a [Vec<SegEdge>],
    l: u32,
    u: u32,
}

impl<'a> SegmentedView<'a> {
    pub fn new(graph: &'a SegmentedEdgeGraph, l: usize, u: usize) -> Self {
        Self {
            edges: &graph.edges,
            l: l as u32,
            u: u as u32,
        }
    }
}

impl AdjacencyView for SegmentedView<'_> {
    #[inline]
    fn neighbors(&self, node: u32, out: &mut Vec<u32>) {
        for e in &self.edges[node as usize] {
            if e.group > self.u {
                break;
            }
            if e.l_lo <= self.l && self.l <= e.l_hi {
                out.push(e.target);
            }
        }
    }

    fn filters_edges(&self) -> bool {
        true
    }
}

/// Distances among the insertion pool, computed on demand. Pool members are
/// addressed by pool position; `OWNER` is the node being inserted.
struct PoolContext<'a, S: Space> {
    space: &'a S,
    pool: &'a [u32],
    owner_rank: u32,
    cache: &'a [Cell<f64>],
    edges: &'a [Vec<SegEdge>],
    labels: Option<&'a [Vec<u32>]>,
}

const OWNER: u32 = u32::MAX;

impl<S: Space> PoolContext<'_, S> {
    fn rank(&self, x: u32) -> u32 {
        if x == OWNER {
            self.owner_rank
        } else {
            self.pool[x as usize]
        }
    }
}

impl<S: Space> PruneContext for PoolContext<'_, S> {
    fn distance(&self, a: u32, b: u32) -> f64 {
        if a == OWNER || b == OWNER {
            return self.space.distance(self.rank(a), self.rank(b));
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        let cell = &self.cache[a as usize * self.pool.len() + b as usize];
        let d = cell.get();
        if !d.is_nan() {
            return d;
        }
        let d = self.space.distance(self.pool[a as usize], self.pool[b as usize]);
        cell.set(d);
        d
    }

    fn is_neighbor(&self, u: u32, c: u32) -> bool {
        let (u, c) = (self.rank(u), self.rank(c));
        self.edges[u as usize].iter().any(|e| e.target == c)
    }

    fn labels(&self, id: u32) -> &[u32] {
        self.labels.map_or(&[], |l| &l[self.rank(id) as usize])
    }
}

impl SegmentedEdgeGraph {
    pub fn build(ds: &AttributedDataset, params: SegmentedEdgeParams) -> Result<Self> {
        let space = rank_space(ds);
        let labels: Vec<Vec<u32>> = match params.prune {
            PruneStrategy::LabelCovered { .. } => ds.attr_rank().iter().map(|&id| ds.labels(id).to_vec()).collect(),
            _ => Vec::new(),
        };
        let labels = (!labels.is_empty()).then_some(labels.as_slice());
        Self::build_on(&space, params, labels)
    }

    /// Builds over a space whose node order is the attribute order.
    pub fn build_on<S: Space>(space: &S, params: SegmentedEdgeParams, labels: Option<&[Vec<u32>]>) -> Result<Self> {
        let n = space.len();
        let mut g = Self {
            edges: vec![Vec::new(); n],
            log: params.record_log.then(|| vec![Vec::new(); n]),
            params,
        };
        let mut probe = Probe::new();
        for i in 1..n as u32 {
            let pool = g.insertion_pool(space, i, &mut probe)?;
            g.connect(space, i, &pool, labels);
        }
        Ok(g)
    }

    /// Candidates for node `i`: every earlier rank when few, otherwise a
    /// beam search over the prefix graph valid for left bound 0.
    fn insertion_pool<S: Space>(&self, space: &S, i: u32, probe: &mut Probe) -> Result<Vec<Neighbor>> {
        let efc = self.params.ef_construction.max(self.params.m);
        let mut pool: Vec<Neighbor> = if (i as usize) <= efc {
            (0..i).map(|r| Neighbor::new(r, space.distance(i, r))).collect()
        } else {
            let view = SegmentedView {
                edges: &self.edges,
                l: 0,
                u: i - 1,
            };
            let entries: Vec<u32> = even_ranks(0, i as usize - 1, self.params.ep_count.max(1))?
                .into_iter()
                .map(|r| r as u32)
                .collect();
            BeamSearch::new(efc)
                .run(&view, space.len(), &entries, |r| space.distance(i, r), probe)?
                .results
        };
        pool.sort();
        Ok(pool)
    }

    fn connect<S: Space>(&mut self, space: &S, i: u32, pool: &[Neighbor], labels: Option<&[Vec<u32>]>) {
        let ranks: Vec<u32> = pool.iter().map(|c| c.id).collect();
        let local: Vec<Neighbor> = pool
            .iter()
            .enumerate()
            .map(|(p, c)| Neighbor::new(p as u32, c.distance))
            .collect();
        // Forward and reverse edge slots of each target's open interval.
        let mut open: HashMap<u32, (usize, usize)> = HashMap::new();
        let mut segments = Vec::new();
        let mut forward: Vec<SegEdge> = Vec::new();
        let cache = vec![Cell::new(f64::NAN); ranks.len() * ranks.len()];
        let mut l = 0u32;
        while l < i {
            let cands: Vec<Neighbor> = local.iter().copied().filter(|c| ranks[c.id as usize] >= l).collect();
            if cands.is_empty() {
                segments.push(LogSegment {
                    l_lo: l,
                    l_hi: i - 1,
                    neighbors: Vec::new(),
                });
                break;
            }
            let ctx = PoolContext {
                space,
                pool: &ranks,
                owner_rank: i,
                cache: &cache,
                edges: &self.edges,
                labels,
            };
            let chosen: Vec<u32> = self
                .params
                .prune
                .apply(OWNER, &cands, self.params.m, &ctx)
                .iter()
                .map(|c| ranks[c.id as usize])
                .collect();
            let hi = *chosen.iter().min().expect("non-empty candidates keep at least one");
            for &s in &chosen {
                match open.get(&s) {
                    Some(&(f, r)) if forward[f].l_hi + 1 == l => {
                        forward[f].l_hi = hi;
                        self.edges[s as usize][r].l_hi = hi;
                    }
                    _ => {
                        let e = SegEdge {
                            target: s,
                            group: i,
                            l_lo: l,
                            l_hi: hi,
                        };
                        forward.push(e);
                        self.edges[s as usize].push(SegEdge { target: i, ..e });
                        open.insert(s, (forward.len() - 1, self.edges[s as usize].len() - 1));
                    }
                }
            }
            let mut sorted = chosen;
            sorted.sort_unstable();
            segments.push(LogSegment {
                l_lo: l,
                l_hi: hi,
                neighbors: sorted,
            });
            l = hi + 1;
        }
        forward.sort_by_key(|e| (e.target, e.l_lo));
        self.edges[i as usize].splice(0..0, forward);
        if let Some(log) = self.log.as_mut() {
            log[i as usize] = segments;
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn params(&self) -> &SegmentedEdgeParams {
        &self.params
    }

    pub fn set_ep_count(&mut self, ep_count: usize) {
        self.params.ep_count = ep_count;
    }

    pub fn edges(&self, rank: u32) -> &[SegEdge] {
        &self.edges[rank as usize]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn build_log(&self) -> Option<&[Vec<LogSegment>]> {
        self.log.as_deref()
    }

    /// Node `i`'s own selection for left bound `l`, decoded from its
    /// creation-group edges.
    pub fn decode_selection(&self, i: u32, l: u32) -> Vec<u32> {
        let mut out: Vec<u32> = self.edges[i as usize]
            .iter()
            .filter(|e| e.group == i && e.l_lo <= l && l <= e.l_hi)
            .map(|e| e.target)
            .collect();
        out.sort_unstable();
        out
    }

    pub fn memory_bytes(&self) -> usize {
        self.edge_count() * std::mem::size_of::<SegEdge>() + self.len() * std::mem::size_of::<Vec<SegEdge>>()
    }

    pub(crate) fn from_parts(params: SegmentedEdgeParams, edges: Vec<Vec<SegEdge>>) -> Self {
        Self {
            params,
            edges,
            log: None,
        }
    }
}

impl RangeSearch for SegmentedEdgeGraph {
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
        let entries: Vec<u32> = even_ranks(l, u.min(self.len().saturating_sub(1)), self.params.ep_count)?
            .into_iter()
            .map(|r| r as u32)
            .collect();
        let view = SegmentedView::new(self, l, u);
        let out = BeamSearch::new(ef.max(k)).run(&view, self.len(), &entries, |r| rank_distance(ds, q, r), probe)?;
        Ok(ranks_to_result(ds, out.results, k, probe))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Vectors;

    /// Six points in rank order v1..v6. Around v6 at the origin, v1, v3, v4,
    /// v5 sit at radii 1..4 on the four axes and v2 at radius 5 on the
    /// diagonal, so the distance order to v6 is v1, v3, v4, v5, v2.
    fn six() -> AttributedDataset {
        let d = |r: f32, deg: f32| [r * deg.to_radians().cos(), r * deg.to_radians().sin()];
        let rows = [d(1.0, 0.0), d(5.0, 45.0), d(2.0, 90.0), d(3.0, 180.0), d(4.0, 270.0), [0.0, 0.0]];
        let v = Vectors::from_rows(2, &rows).unwrap();
        AttributedDataset::new(v, (1..=6).collect(), vec![vec![]; 6]).unwrap()
    }

    fn six_graph() -> SegmentedEdgeGraph {
        let mut p = SegmentedEdgeParams::new(2, 16);
        p.record_log = true;
        SegmentedEdgeGraph::build(&six(), p).unwrap()
    }

    #[test]
    fn progressive_selection_on_six_points() {
        let g = six_graph();
        let log = &g.build_log().unwrap()[5];
        let got: Vec<(u32, u32, Vec<u32>)> = log.iter().map(|s| (s.l_lo, s.l_hi, s.neighbors.clone())).collect();
        assert_eq!(
            got,
            vec![(0, 0, vec![0, 2]), (1, 2, vec![2, 3]), (3, 3, vec![3, 4]), (4, 4, vec![4])]
        );
    }

    #[test]
    fn compressed_intervals_on_six_points() {
        let g = six_graph();
        let mut own: Vec<(u32, u32, u32)> = g
            .edges(5)
            .iter()
            .filter(|e| e.group == 5)
            .map(|e| (e.target, e.l_lo, e.l_hi))
            .collect();
        own.sort();
        assert_eq!(own, vec![(0, 0, 0), (2, 0, 2), (3, 1, 3), (4, 3, 4)]);
        // Reverse edges mirror them.
        assert!(g.edges(3).iter().any(|e| *e == SegEdge { target: 5, group: 5, l_lo: 1, l_hi: 3 }));
    }

    #[test]
    fn narrow_range_leaves_only_in_range_first_hops() {
        let g = six_graph();
        let view = SegmentedView::new(&g, 3, 5);
        let mut out = Vec::new();
        view.neighbors(5, &mut out);
        out.sort();
        assert_eq!(out, vec![3, 4]);
    }

    #[test]
    fn single_point_has_no_edges() {
        let v = Vectors::from_rows(2, &[[0.0, 0.0]]).unwrap();
        let ds = AttributedDataset::new(v, vec![1], vec![vec![]]).unwrap();
        let g = SegmentedEdgeGraph::build(&ds, SegmentedEdgeParams::new(4, 8)).unwrap();
        assert_eq!(g.edge_count(), 0);
        let mut p = Probe::new();
        let r = g.search_ranks(&ds, &[1.0, 1.0], 0, 0, 4, 1, &mut p).unwrap();
        assert_eq!(r.ids, vec![0]);
    }

    #[test]
    fn replay_matches_log_exhaustively() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let n = 300;
        let v = Vectors::from_flat(3, (0..n * 3).map(|_| rng.random_range(0.0f32..1.0)).collect()).unwrap();
        let attrs = (0..n as i64).map(|_| rng.random_range(0..1000)).collect();
        let ds = AttributedDataset::new(v, attrs, vec![vec![]; n]).unwrap();
        let mut p = SegmentedEdgeParams::new(6, 24);
        p.record_log = true;
        let g = SegmentedEdgeGraph::build(&ds, p).unwrap();
        for (i, segs) in g.build_log().unwrap().iter().enumerate() {
            let mut next = 0;
            for s in segs {
                assert_eq!(s.l_lo, next);
                for l in s.l_lo..=s.l_hi {
                    assert_eq!(g.decode_selection(i as u32, l), s.neighbors);
                }
                next = s.l_hi + 1;
            }
            assert_eq!(next as usize, i);
        }
    }
}
