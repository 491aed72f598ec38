//! One graph under a fused metric: weighted vector distance plus a penalty
//! per mismatched attribute. Results are ranked by that metric, so they may
//! include points that fail the filter.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::common_labels;
use crate::base::{build_knn_graph, sampled_mean_distance, Hnsw, HnswParams};
use crate::distance::{l2, Probe};
use crate::error::{Error, Result};
use crate::filter::check_dim;
use crate::graph::{Adjacency, BeamSearch, PruneStrategy};
use crate::space::Space;
use crate::types::{AttributedDataset, DataPoint, SearchResult, Vectors};

const DISTANCE_PAIRS: usize = 10_000;

/// `w1 * l2 + w2 * mismatches`; attribute tuples are compared as sets of
/// equal size.
pub fn joint_distance(a: &DataPoint, b: &DataPoint, w1: f64, w2: f64) -> Result<f64> {
    if a.labels.len() != b.labels.len() {
        return Err(Error::Arity {
            expected: a.labels.len(),
            got: b.labels.len(),
        });
    }
    if a.vector.len() != b.vector.len() {
        return Err(Error::Dimension {
            expected: a.vector.len(),
            got: b.vector.len(),
        });
    }
    Ok(fused(l2(&a.vector, &b.vector), &a.labels, &b.labels, w1, w2))
}

#[inline]
fn fused(d: f64, a: &[u32], b: &[u32], w1: f64, w2: f64) -> f64 {
    let mismatches = a.len() - common_labels(a, b);
    w1 * d + w2 * mismatches as f64
}

pub struct JointSpace<'a> {
    pub vectors: &'a Vectors,
    pub attrs: &'a [Vec<u32>],
    pub w1: f64,
    pub w2: f64,
}

impl Space for JointSpace<'_> {
    fn len(&self) -> usize {
        self.vectors.len()
    }

    fn distance(&self, a: u32, b: u32) -> f64 {
        let d = l2(self.vectors.get(a as usize), self.vectors.get(b as usize));
        fused(d, &self.attrs[a as usize], &self.attrs[b as usize], self.w1, self.w2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JointVariant {
    /// Exact `m`-nearest-neighbor graph under the fused metric; quadratic
    /// build.
    KeepNearest,
    /// RNG-pruned navigable small world.
    Nsw,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointParams {
    pub m: usize,
    pub ef_construction: usize,
    pub variant: JointVariant,
    pub w1: f64,
    /// `None` means `w1` times the sampled mean pairwise vector distance.
    pub w2: Option<f64>,
    /// Fixed entry points shared by every query.
    pub entry_count: usize,
    pub seed: u64,
}

impl JointParams {
    pub fn new(m: usize, ef_construction: usize, variant: JointVariant) -> Self {
        Self {
            m,
            ef_construction,
            variant,
            w1: 1.0,
            w2: None,
            entry_count: 16,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointIndex {
    pub(crate) graph: Adjacency,
    pub(crate) entries: Vec<u32>,
    pub(crate) attrs: Vec<Vec<u32>>,
    pub(crate) w1: f64,
    pub(crate) w2: f64,
    pub(crate) variant: JointVariant,
}

impl JointIndex {
    pub fn build(ds: &AttributedDataset, params: &JointParams) -> Result<Self> {
        if ds.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let attrs = ds.label_sets().to_vec();
        let arity = attrs[0].len();
        if let Some(bad) = attrs.iter().find(|a| a.len() != arity) {
            return Err(Error::Arity {
                expected: arity,
                got: bad.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let w2 = match params.w2 {
            Some(w) => w,
            None => params.w1 * sampled_mean_distance(ds.vectors(), DISTANCE_PAIRS, &mut rng),
        };
        let space = JointSpace {
            vectors: ds.vectors(),
            attrs: &attrs,
            w1: params.w1,
            w2,
        };
        let graph = match params.variant {
            JointVariant::KeepNearest => build_knn_graph(&space, params.m.min(ds.len() - 1))?,
            JointVariant::Nsw => {
                let hp = HnswParams::new(params.m, params.ef_construction)
                    .flat()
                    .with_m_max0(params.m)
                    .with_prune(PruneStrategy::RNG)
                    .with_seed(params.seed);
                Adjacency {
                    lists: Hnsw::build(&space, hp)?.layer0,
                }
            }
        };
        let all: Vec<u32> = (0..ds.len() as u32).collect();
        let mut entries: Vec<u32> = all.choose_multiple(&mut rng, params.entry_count.max(1)).copied().collect();
        entries.sort_unstable();
        Ok(Self {
            graph,
            entries,
            attrs,
            w1: params.w1,
            w2,
            variant: params.variant,
        })
    }

    pub fn graph(&self) -> &Adjacency {
        &self.graph
    }

    pub fn weights(&self) -> (f64, f64) {
        (self.w1, self.w2)
    }

    pub fn variant(&self) -> JointVariant {
        self.variant
    }

    pub fn arity(&self) -> usize {
        self.attrs.first().map_or(0, Vec::len)
    }

    /// Top-`k` under the fused metric for query attributes `q_attrs`
    /// (sorted). Distances in the result are fused distances.
    pub fn search(&self, vectors: &Vectors, q: &[f32], q_attrs: &[u32], ef: usize, k: usize, probe: &mut Probe) -> Result<SearchResult> {
        check_dim(vectors, q)?;
        if q_attrs.len() != self.arity() {
            return Err(Error::Arity {
                expected: self.arity(),
                got: q_attrs.len(),
            });
        }
        let score = |v: u32| fused(l2(q, vectors.get(v as usize)), q_attrs, &self.attrs[v as usize], self.w1, self.w2);
        let out = BeamSearch::new(ef.max(k)).run(&self.graph, self.graph.len(), &self.entries, score, probe)?;
        let mut res = SearchResult::from_hits(out.results, k, probe);
        res.approximate_predicate = true;
        Ok(res)
    }

    pub fn memory_bytes(&self) -> usize {
        self.graph.memory_bytes() + self.attrs.iter().map(|a| a.len() * 4 + std::mem::size_of::<Vec<u32>>()).sum::<usize>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Neighbor;
    use rand::Rng;

    fn point(v: Vec<f32>, labels: Vec<u32>) -> DataPoint {
        DataPoint::new(0, v, 0, labels)
    }

    #[test]
    fn fused_metric_arithmetic() {
        let a = point(vec![0.0, 0.0], vec![1, 5, 9]);
        let b = point(vec![2.0, 0.0], vec![1, 6, 9]);
        assert_eq!(joint_distance(&a, &b, 1.0, 0.5).unwrap(), 2.5);
        assert_eq!(joint_distance(&a, &b, 1.0, 0.0).unwrap(), 2.0);
        assert_eq!(joint_distance(&a, &a, 1.0, 3.0).unwrap(), 0.0);
        assert_eq!(joint_distance(&b, &a, 1.0, 0.5).unwrap(), 2.5);
        let c = point(vec![0.0, 0.0], vec![1]);
        assert!(matches!(joint_distance(&a, &c, 1.0, 1.0), Err(Error::Arity { expected: 3, got: 1 })));
    }

    fn dataset(n: usize, labels: u32) -> AttributedDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let v = Vectors::from_flat(4, (0..n * 4).map(|_| rng.random_range(0.0f32..1.0)).collect()).unwrap();
        let l = (0..n).map(|_| vec![rng.random_range(0..labels)]).collect();
        AttributedDataset::new(v, vec![0; n], l).unwrap()
    }

    #[test]
    fn mixed_arity_fails_the_build() {
        let v = Vectors::from_rows(1, &[[0.0], [1.0]]).unwrap();
        let ds = AttributedDataset::new(v, vec![0, 0], vec![vec![1], vec![1, 2]]).unwrap();
        let p = JointParams::new(4, 8, JointVariant::Nsw);
        assert!(matches!(JointIndex::build(&ds, &p), Err(Error::Arity { .. })));
    }

    #[test]
    fn heavy_penalty_returns_only_matches() {
        let ds = dataset(800, 4);
        for variant in [JointVariant::KeepNearest, JointVariant::Nsw] {
            let mut p = JointParams::new(8, 32, variant);
            p.w2 = Some(1000.0);
            let idx = JointIndex::build(&ds, &p).unwrap();
            let r = idx.search(ds.vectors(), &[0.5; 4], &[2], 64, 10, &mut Probe::new()).unwrap();
            assert!(r.approximate_predicate);
            assert_eq!(r.len(), 10);
            assert!(r.ids.iter().all(|&i| ds.labels(i) == [2]), "{variant:?}");
        }
    }

    #[test]
    fn zero_penalty_is_plain_vector_search() {
        let ds = dataset(300, 3);
        let mut p = JointParams::new(10, 40, JointVariant::Nsw);
        p.w2 = Some(0.0);
        let idx = JointIndex::build(&ds, &p).unwrap();
        let q = [0.2f32, 0.7, 0.7, 0.1];
        let r = idx.search(ds.vectors(), &q, &[0], 300, 10, &mut Probe::new()).unwrap();
        let mut all: Vec<Neighbor> = (0..300).map(|i| Neighbor::new(i, l2(&q, ds.vector(i)))).collect();
        all.sort();
        assert_eq!(r.ids, all[..10].iter().map(|n| n.id).collect::<Vec<_>>());
    }

    #[test]
    fn default_penalty_tracks_typical_distance() {
        let ds = dataset(500, 2);
        let idx = JointIndex::build(&ds, &JointParams::new(6, 24, JointVariant::KeepNearest)).unwrap();
        let (w1, w2) = idx.weights();
        assert_eq!(w1, 1.0);
        // Mean distance of uniform points in the unit 4-cube is about 0.78.
        assert!((0.7..0.86).contains(&w2), "{w2}");
    }
}
