//! Label-aware Vamana graphs.
//!
//! Both builds produce the same structure: one adjacency over dataset ids
//! plus a start point per label that carries the label. A query for label
//! `f` starts there and only ever scores nodes carrying `f`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::shares_label;
use crate::base::{sampled_medoid, Vamana, VamanaParams};
use crate::distance::Probe;
use crate::error::{Error, Result};
use crate::filter::check_dim;
use crate::graph::{prune_label_covered, Adjacency, BeamSearch, FilterMode};
use crate::space::{Space, Subset, VectorSpace};
use crate::types::{AttributedDataset, Neighbor, SearchResult, Vectors};

const MEDOID_SAMPLE: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct LabelGraphParams {
    pub m: usize,
    pub ef_construction: usize,
    pub alpha: f64,
    /// Per-label degree cap for stitched builds.
    pub m_small: usize,
    pub seed: u64,
}

impl LabelGraphParams {
    pub fn new(m: usize, ef_construction: usize) -> Self {
        Self {
            m,
            ef_construction,
            alpha: 1.2,
            m_small: (m / 2).max(1),
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelGraph {
    pub(crate) adjacency: Adjacency,
    pub(crate) starts: BTreeMap<u32, u32>,
    pub(crate) labels: Vec<Vec<u32>>,
}

impl LabelGraph {
    /// Incremental build: each point searches from its labels' start points
    /// over nodes sharing one of its labels.
    pub fn build_filtered(ds: &AttributedDataset, params: &LabelGraphParams) -> Result<Self> {
        let labels = labeled(ds)?;
        let n = ds.len();
        let vectors = ds.vectors();
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let starts = start_points(vectors, &labels, &mut rng);
        let mut adj = Adjacency::new(n);
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.shuffle(&mut rng);
        let mut probe = Probe::new();
        for &p in &order {
            let own = &labels[p as usize];
            let mut entries: Vec<u32> = own.iter().map(|f| starts[f]).collect();
            entries.sort_unstable();
            entries.dedup();
            let shares = |v: u32| shares_label(&labels[v as usize], own);
            let out = BeamSearch::new(params.ef_construction)
                .filter(&shares, FilterMode::Strict)
                .collect_expanded()
                .run(&adj, n, &entries, |v| vectors.distance(p, v), &mut probe)?;
            let mut pool = out.expanded;
            pool.extend(out.results);
            pool.extend(adj.get(p).iter().map(|&v| Neighbor::new(v, vectors.distance(p, v))));
            pool.sort();
            pool.dedup_by_key(|c| c.id);
            let kept = prune(vectors, &labels, p, &pool, params.m, params.alpha);
            adj.lists[p as usize] = kept.iter().map(|c| c.id).collect();
            for c in kept {
                insert_reverse(vectors, &labels, &mut adj, c.id, p, params.m, params.alpha);
            }
        }
        Ok(Self {
            adjacency: adj,
            starts,
            labels,
        })
    }

    /// One Vamana graph of degree `m_small` per label over its carriers;
    /// the union is re-pruned wherever it exceeds `m`.
    pub fn build_stitched(ds: &AttributedDataset, params: &LabelGraphParams) -> Result<Self> {
        let labels = labeled(ds)?;
        let vectors = ds.vectors();
        let mut carriers: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for (id, ls) in labels.iter().enumerate() {
            for &f in ls {
                carriers.entry(f).or_default().push(id as u32);
            }
        }
        let mut adj = Adjacency::new(ds.len());
        let mut starts = BTreeMap::new();
        for (&f, ids) in &carriers {
            let vp = VamanaParams::new(params.m_small, params.ef_construction)
                .with_alpha(params.alpha)
                .with_seed(params.seed ^ f as u64);
            let sub = Vamana::build(&Subset::new(vectors, ids.as_slice()), vp)?;
            for (local, list) in sub.adjacency().lists.iter().enumerate() {
                let out = &mut adj.lists[ids[local] as usize];
                for &t in list {
                    let g = ids[t as usize];
                    if !out.contains(&g) {
                        out.push(g);
                    }
                }
            }
            starts.insert(f, ids[sub.medoid() as usize]);
        }
        for p in 0..ds.len() as u32 {
            if adj.get(p).len() > params.m {
                let mut cands: Vec<Neighbor> = adj.get(p).iter().map(|&v| Neighbor::new(v, vectors.distance(p, v))).collect();
                cands.sort();
                adj.lists[p as usize] = prune(vectors, &labels, p, &cands, params.m, params.alpha).iter().map(|c| c.id).collect();
            }
        }
        Ok(Self {
            adjacency: adj,
            starts,
            labels,
        })
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn start_point(&self, label: u32) -> Option<u32> {
        self.starts.get(&label).copied()
    }

    pub fn start_points(&self) -> &BTreeMap<u32, u32> {
        &self.starts
    }

    pub fn labels(&self, id: u32) -> &[u32] {
        &self.labels[id as usize]
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Carriers of `label` reachable from its start point through carriers.
    pub fn reachable_carriers(&self, label: u32) -> Vec<u32> {
        let Some(start) = self.start_point(label) else {
            return Vec::new();
        };
        let carries = |v: u32| self.labels[v as usize].binary_search(&label).is_ok();
        let mut seen = vec![false; self.len()];
        seen[start as usize] = true;
        let mut stack = vec![start];
        let mut out = Vec::new();
        while let Some(v) = stack.pop() {
            out.push(v);
            for &w in self.adjacency.get(v) {
                if !seen[w as usize] && carries(w) {
                    seen[w as usize] = true;
                    stack.push(w);
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Nearest carriers of `label`; an unknown label gives an empty result.
    pub fn search(&self, vectors: &Vectors, q: &[f32], label: u32, ef: usize, k: usize, probe: &mut Probe) -> Result<SearchResult> {
        check_dim(vectors, q)?;
        let Some(start) = self.start_point(label) else {
            return Ok(SearchResult::empty(probe));
        };
        let carries = |v: u32| self.labels[v as usize].binary_search(&label).is_ok();
        let out = BeamSearch::new(ef.max(k))
            .filter(&carries, FilterMode::Strict)
            .run(&self.adjacency, self.len(), &[start], |v| vectors.query_distance(q, v), probe)?;
        Ok(SearchResult::from_hits(out.results, k, probe))
    }

    pub fn memory_bytes(&self) -> usize {
        self.adjacency.memory_bytes()
            + self.labels.iter().map(|l| l.len() * 4 + std::mem::size_of::<Vec<u32>>()).sum::<usize>()
            + self.starts.len() * 8
    }
}

fn labeled(ds: &AttributedDataset) -> Result<Vec<Vec<u32>>> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(id) = ds.label_sets().iter().position(Vec::is_empty) {
        return Err(Error::Build(format!("point {id} has no label")));
    }
    Ok(ds.label_sets().to_vec())
}

/// Sampled medoid of each label's carriers.
fn start_points(vectors: &Vectors, labels: &[Vec<u32>], rng: &mut ChaCha8Rng) -> BTreeMap<u32, u32> {
    let mut carriers: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (id, ls) in labels.iter().enumerate() {
        for &f in ls {
            carriers.entry(f).or_default().push(id as u32);
        }
    }
    carriers
        .into_iter()
        .map(|(f, ids)| (f, sampled_medoid(vectors, &ids, MEDOID_SAMPLE, rng)))
        .collect()
}

fn prune(vectors: &Vectors, labels: &[Vec<u32>], owner: u32, cands: &[Neighbor], m: usize, alpha: f64) -> Vec<Neighbor> {
    prune_label_covered(owner, cands, m, alpha, |a, b| vectors.distance(a, b), |v| labels[v as usize].as_slice())
}

fn insert_reverse(vectors: &Vectors, labels: &[Vec<u32>], adj: &mut Adjacency, owner: u32, new: u32, m: usize, alpha: f64) {
    let list = &mut adj.lists[owner as usize];
    if list.contains(&new) {
        return;
    }
    list.push(new);
    if list.len() <= m {
        return;
    }
    let mut cands: Vec<Neighbor> = list.iter().map(|&v| Neighbor::new(v, vectors.distance(owner, v))).collect();
    cands.sort();
    *list = prune(vectors, labels, owner, &cands, m, alpha).iter().map(|c| c.id).collect();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::l2;
    use rand::Rng;

    fn dataset(n: usize, label_of: impl Fn(usize) -> Vec<u32>) -> AttributedDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let v = Vectors::from_flat(4, (0..n * 4).map(|_| rng.random_range(0.0f32..1.0)).collect()).unwrap();
        AttributedDataset::new(v, vec![0; n], (0..n).map(label_of).collect()).unwrap()
    }

    fn oracle(ds: &AttributedDataset, q: &[f32], label: u32, k: usize) -> Vec<u32> {
        let mut all: Vec<Neighbor> = (0..ds.len() as u32)
            .filter(|&i| ds.labels(i).contains(&label))
            .map(|i| Neighbor::new(i, l2(q, ds.vector(i))))
            .collect();
        all.sort();
        all.iter().take(k).map(|n| n.id).collect()
    }

    #[test]
    fn unlabeled_point_fails_the_build() {
        let ds = dataset(10, |i| if i == 7 { vec![] } else { vec![1] });
        let p = LabelGraphParams::new(4, 16);
        assert!(matches!(LabelGraph::build_filtered(&ds, &p), Err(Error::Build(_))));
        assert!(matches!(LabelGraph::build_stitched(&ds, &p), Err(Error::Build(_))));
    }

    #[test]
    fn start_points_carry_their_label_and_degree_is_capped() {
        let ds = dataset(600, |i| vec![(i % 5) as u32, 10 + (i % 3) as u32]);
        let p = LabelGraphParams::new(8, 32);
        for g in [LabelGraph::build_filtered(&ds, &p).unwrap(), LabelGraph::build_stitched(&ds, &p).unwrap()] {
            assert_eq!(g.start_points().len(), 8);
            for (&f, &s) in g.start_points() {
                assert!(g.labels(s).contains(&f));
            }
            assert!(g.adjacency().max_degree() <= 8);
        }
    }

    #[test]
    fn disjoint_populations_never_leak() {
        let ds = dataset(1000, |i| vec![(i % 2) as u32]);
        let p = LabelGraphParams::new(8, 32);
        let g = LabelGraph::build_filtered(&ds, &p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let q: Vec<f32> = (0..4).map(|_| rng.random_range(0.0..1.0)).collect();
            let f = rng.random_range(0..2u32);
            let r = g.search(ds.vectors(), &q, f, 16, 10, &mut Probe::new()).unwrap();
            assert_eq!(r.len(), 10);
            assert!(r.ids.iter().all(|&i| ds.labels(i) == [f]));
        }
    }

    #[test]
    fn rare_label_returns_exactly_its_carriers() {
        let ds = dataset(500, |i| if i % 100 == 3 { vec![9] } else { vec![1] });
        let p = LabelGraphParams::new(8, 32);
        for g in [LabelGraph::build_filtered(&ds, &p).unwrap(), LabelGraph::build_stitched(&ds, &p).unwrap()] {
            let q = [0.5f32; 4];
            let r = g.search(ds.vectors(), &q, 9, 16, 5, &mut Probe::new()).unwrap();
            let mut got = r.ids.clone();
            got.sort();
            assert_eq!(got, vec![3, 103, 203, 303, 403]);
            assert!(g.search(ds.vectors(), &q, 77, 16, 5, &mut Probe::new()).unwrap().is_empty());
        }
    }

    #[test]
    fn stitched_subgraphs_reach_every_carrier() {
        let ds = dataset(900, |i| vec![(i % 3) as u32]);
        let g = LabelGraph::build_stitched(&ds, &LabelGraphParams::new(12, 48)).unwrap();
        for f in 0..3u32 {
            let want: Vec<u32> = (0..900u32).filter(|i| i % 3 == f).collect();
            assert_eq!(g.reachable_carriers(f), want);
        }
    }

    #[test]
    fn wide_search_matches_oracle() {
        let ds = dataset(400, |i| vec![(i % 2) as u32]);
        let p = LabelGraphParams::new(10, 40);
        let q = [0.1f32, 0.9, 0.4, 0.4];
        for g in [LabelGraph::build_filtered(&ds, &p).unwrap(), LabelGraph::build_stitched(&ds, &p).unwrap()] {
            let r = g.search(ds.vectors(), &q, 1, 200, 10, &mut Probe::new()).unwrap();
            assert_eq!(r.ids, oracle(&ds, &q, 1, 10));
        }
    }
}
