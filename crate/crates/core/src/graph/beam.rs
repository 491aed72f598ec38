use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::visited::with_visited;
use super::AdjacencyView;
use crate::distance::{Phase, Probe};
use crate::error::{Error, Result};
use crate::types::Neighbor;

/// How a node filter interacts with traversal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FilterMode {
    /// Non-members are neither scored nor expanded. Entry points are always
    /// scored and expanded, but enter the results only if they pass.
    #[default]
    Strict,
    /// Non-members are scored and expanded as routing hops but never enter
    /// the results.
    Route,
}

/// Best-first search configuration.
///
/// The result heap holds at most `ef` passing nodes; the search stops once
/// the closest unexpanded candidate is farther than the worst result of a
/// full heap.
#[derive(Clone, Copy)]
pub struct BeamSearch<'a> {
    pub ef: usize,
    pub filter: Option<&'a (dyn Fn(u32) -> bool + Sync + 'a)>,
    pub mode: FilterMode,
    pub collect_expanded: bool,
}

#[derive(Clone, Debug, Default)]
pub struct BeamOutput {
    /// Passing nodes, ascending by `(distance, id)`, at most `ef`.
    pub results: Vec<Neighbor>,
    /// Every expanded node in expansion order, when requested.
    pub expanded: Vec<Neighbor>,
}

impl<'a> BeamSearch<'a> {
    pub fn new(ef: usize) -> Self {
        Self {
            ef: ef.max(1),
            filter: None,
            mode: FilterMode::Strict,
            collect_expanded: false,
        }
    }

    pub fn filter(mut self, f: &'a (dyn Fn(u32) -> bool + Sync + 'a), mode: FilterMode) -> Self {
        self.filter = Some(f);
        self.mode = mode;
        self
    }

    pub fn collect_expanded(mut self) -> Self {
        self.collect_expanded = true;
        self
    }

    /// `n` bounds the node ids the view can return.
    pub fn run<V, S>(&self, view: &V, n: usize, entries: &[u32], mut score: S, probe: &mut Probe) -> Result<BeamOutput>
    where
        V: AdjacencyView + ?Sized,
        S: FnMut(u32) -> f64,
    {
        let mut seeds: Vec<Neighbor> = Vec::with_capacity(entries.len());
        for &e in entries {
            if !seeds.iter().any(|s| s.id == e) {
                seeds.push(Neighbor::new(e, probe.distance(e, || score(e))));
            }
        }
        self.run_from(view, n, &seeds, score, probe)
    }

    /// Like [`run`](Self::run) from entries whose distances are already
    /// known; seeds are not scored again.
    pub fn run_from<V, S>(&self, view: &V, n: usize, seeds: &[Neighbor], mut score: S, probe: &mut Probe) -> Result<BeamOutput>
    where
        V: AdjacencyView + ?Sized,
        S: FnMut(u32) -> f64,
    {
        if seeds.is_empty() {
            return Err(Error::NoEntry);
        }
        let ef = self.ef;
        let timed_edges = view.filters_edges();
        with_visited(n, |visited| {
            let mut candidates: BinaryHeap<Reverse<Neighbor>> = BinaryHeap::new();
            let mut results: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(ef + 1);
            let mut expanded = Vec::new();
            let mut buf = Vec::new();

            let passes = |probe: &mut Probe, node: u32| match self.filter {
                None => true,
                Some(f) => probe.phase(Phase::EdgeFiltering, || f(node)),
            };

            for &nb in seeds {
                if !visited.insert(nb.id) {
                    continue;
                }
                let member = passes(probe, nb.id);
                probe.phase(Phase::HeapMaintenance, || {
                    candidates.push(Reverse(nb));
                    if member {
                        results.push(nb);
                        if results.len() > ef {
                            results.pop();
                        }
                    }
                });
            }

            while let Some(Reverse(cur)) = probe.phase(Phase::HeapMaintenance, || candidates.pop()) {
                if results.len() >= ef && results.peek().is_some_and(|w| cur.distance > w.distance) {
                    break;
                }
                if self.collect_expanded {
                    expanded.push(cur);
                }
                buf.clear();
                if timed_edges {
                    probe.phase(Phase::EdgeFiltering, || view.neighbors(cur.id, &mut buf));
                } else {
                    view.neighbors(cur.id, &mut buf);
                }
                for &nb in &buf {
                    if !visited.insert(nb) {
                        continue;
                    }
                    let member = passes(probe, nb);
                    if !member && self.mode == FilterMode::Strict {
                        continue;
                    }
                    let d = probe.distance(nb, || score(nb));
                    let full = results.len() >= ef;
                    if full && results.peek().is_some_and(|w| d >= w.distance) {
                        continue;
                    }
                    let cand = Neighbor::new(nb, d);
                    probe.phase(Phase::HeapMaintenance, || {
                        candidates.push(Reverse(cand));
                        if member {
                            results.push(cand);
                            if results.len() > ef {
                                results.pop();
                            }
                        }
                    });
                }
            }

            let results = results.into_sorted_vec();
            Ok(BeamOutput { results, expanded })
        })
    }
}

/// Top-`k` of a beam search of width `ef`; `filter` members only, routed
/// strictly.
pub fn beam_search<V, S>(
    view: &V,
    n: usize,
    entries: &[u32],
    score: S,
    ef: usize,
    k: usize,
    filter: Option<&(dyn Fn(u32) -> bool + Sync)>,
    probe: &mut Probe,
) -> Result<Vec<Neighbor>>
where
    V: AdjacencyView + ?Sized,
    S: FnMut(u32) -> f64,
{
    let mut search = BeamSearch::new(ef.max(k));
    if let Some(f) = filter {
        search = search.filter(f, FilterMode::Strict);
    }
    let mut out = search.run(view, n, entries, score, probe)?.results;
    out.truncate(k);
    Ok(out)
}
