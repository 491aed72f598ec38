//! Hierarchical navigable small-world graph.
//!
//! Built sequentially in id order so a fixed seed reproduces the same graph.
//! Neighbor selection is delegated to a [`PruneStrategy`], which lets the
//! same builder produce RNG-pruned, two-hop-pruned or keep-nearest graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distance::Probe;
use crate::error::{Error, Result};
use crate::graph::{AdjacencyView, BeamSearch, FilterMode, PruneContext, PruneStrategy};
use crate::space::Space;
use crate::types::Neighbor;

#[derive(Clone, Debug, PartialEq)]
pub struct HnswParams {
    /// Degree cap above layer 0.
    pub m: usize,
    /// Degree cap at layer 0.
    pub m_max0: usize,
    pub ef_construction: usize,
    pub prune: PruneStrategy,
    /// Single layer only.
    pub flat: bool,
    pub seed: u64,
}

impl HnswParams {
    pub fn new(m: usize, ef_construction: usize) -> Self {
        Self {
            m,
            m_max0: 2 * m,
            ef_construction,
            prune: PruneStrategy::RNG,
            flat: false,
            seed: 42,
        }
    }

    pub fn with_prune(mut self, prune: PruneStrategy) -> Self {
        self.prune = prune;
        self
    }

    pub fn with_m_max0(mut self, m_max0: usize) -> Self {
        self.m_max0 = m_max0;
        self
    }

    pub fn flat(mut self) -> Self {
        self.flat = true;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn cap(&self, level: usize) -> usize {
        if level == 0 {
            self.m_max0
        } else {
            self.m
        }
    }
}

impl Default for HnswParams {
    fn default() -> Self {
        Self::new(16, 200)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hnsw {
    pub(crate) params: HnswParams,
    pub(crate) levels: Vec<u8>,
    pub(crate) layer0: Vec<Vec<u32>>,
    /// `upper[v][l - 1]` is `v`'s list at layer `l`.
    pub(crate) upper: Vec<Vec<Vec<u32>>>,
    pub(crate) entry: u32,
    pub(crate) max_level: usize,
}

/// One layer of an [`Hnsw`] as an adjacency view.
pub struct Layer<'a> {
    hnsw: &'a Hnsw,
    level: usize,
}

impl AdjacencyView for Layer<'_> {
    #[inline]
    fn neighbors(&self, node: u32, out: &mut Vec<u32>) {
        out.extend_from_slice(self.hnsw.links(node, self.level));
    }
}

struct BuildContext<'a, S: Space> {
    space: &'a S,
    graph: &'a Hnsw,
    level: usize,
    labels: Option<&'a [Vec<u32>]>,
}

impl<S: Space> PruneContext for BuildContext<'_, S> {
    fn distance(&self, a: u32, b: u32) -> f64 {
        self.space.distance(a, b)
    }

    fn is_neighbor(&self, u: u32, c: u32) -> bool {
        self.graph.links(u, self.level).contains(&c)
    }

    fn labels(&self, id: u32) -> &[u32] {
        self.labels.map_or(&[], |l| &l[id as usize])
    }
}

impl Hnsw {
    pub fn build<S: Space>(space: &S, params: HnswParams) -> Result<Self> {
        Self::build_with_labels(space, params, None)
    }

    /// `labels` feeds label-aware pruning rules.
    pub fn build_with_labels<S: Space>(space: &S, params: HnswParams, labels: Option<&[Vec<u32>]>) -> Result<Self> {
        let n = space.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if params.m == 0 || params.m_max0 == 0 {
            return Err(Error::config("HNSW degree caps must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let ml = 1.0 / (params.m.max(2) as f64).ln();
        let levels: Vec<u8> = (0..n)
            .map(|_| {
                if params.flat {
                    0
                } else {
                    let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
                    ((-u.ln() * ml).floor() as usize).min(u8::MAX as usize) as u8
                }
            })
            .collect();
        let mut g = Hnsw {
            params,
            upper: levels.iter().map(|&l| vec![Vec::new(); l as usize]).collect(),
            layer0: vec![Vec::new(); n],
            levels,
            entry: 0,
            max_level: 0,
        };
        g.max_level = g.levels[0] as usize;
        for i in 1..n as u32 {
            g.insert(space, i, labels)?;
        }
        Ok(g)
    }

    fn insert<S: Space>(&mut self, space: &S, i: u32, labels: Option<&[Vec<u32>]>) -> Result<()> {
        let level = self.levels[i as usize] as usize;
        let mut probe = Probe::new();
        let score = |j: u32| space.distance(i, j);
        let mut eps = vec![self.entry];
        for lc in (level + 1..=self.max_level).rev() {
            let out = BeamSearch::new(1).run(&self.layer(lc), space.len(), &eps, score, &mut probe)?;
            eps = vec![out.results[0].id];
        }
        for lc in (0..=level.min(self.max_level)).rev() {
            let found = BeamSearch::new(self.params.ef_construction)
                .run(&self.layer(lc), space.len(), &eps, score, &mut probe)?
                .results;
            let cap = self.params.cap(lc);
            let ctx = BuildContext {
                space,
                graph: self,
                level: lc,
                labels,
            };
            let chosen = self.params.prune.apply(i, &found, cap, &ctx);
            *self.links_mut(i, lc) = chosen.iter().map(|n| n.id).collect();
            for c in &chosen {
                self.add_reverse(space, c.id, i, lc, labels);
            }
            eps = found.iter().map(|n| n.id).collect();
        }
        if level > self.max_level {
            self.max_level = level;
            self.entry = i;
        }
        Ok(())
    }

    fn add_reverse<S: Space>(&mut self, space: &S, owner: u32, new: u32, level: usize, labels: Option<&[Vec<u32>]>) {
        let cap = self.params.cap(level);
        let list = self.links_mut(owner, level);
        if list.contains(&new) {
            return;
        }
        list.push(new);
        if list.len() <= cap {
            return;
        }
        let mut cands: Vec<Neighbor> = list
            .iter()
            .map(|&x| Neighbor::new(x, space.distance(owner, x)))
            .collect();
        cands.sort();
        let ctx = BuildContext {
            space,
            graph: self,
            level,
            labels,
        };
        let kept = self.params.prune.apply(owner, &cands, cap, &ctx);
        *self.links_mut(owner, level) = kept.iter().map(|n| n.id).collect();
    }

    #[inline]
    pub fn links(&self, node: u32, level: usize) -> &[u32] {
        if level == 0 {
            &self.layer0[node as usize]
        } else {
            &self.upper[node as usize][level - 1]
        }
    }

    fn links_mut(&mut self, node: u32, level: usize) -> &mut Vec<u32> {
        if level == 0 {
            &mut self.layer0[node as usize]
        } else {
            &mut self.upper[node as usize][level - 1]
        }
    }

    pub fn layer(&self, level: usize) -> Layer<'_> {
        Layer { hnsw: self, level }
    }

    pub fn len(&self) -> usize {
        self.layer0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layer0.is_empty()
    }

    pub fn entry_point(&self) -> u32 {
        self.entry
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    pub fn level_of(&self, node: u32) -> usize {
        self.levels[node as usize] as usize
    }

    pub fn params(&self) -> &HnswParams {
        &self.params
    }

    pub fn layer0_lists(&self) -> &[Vec<u32>] {
        &self.layer0
    }

    /// Nodes present at `level`.
    pub fn nodes_at(&self, level: usize) -> impl Iterator<Item = u32> + '_ {
        (0..self.len() as u32).filter(move |&v| self.level_of(v) >= level)
    }

    /// Greedy descent through the upper layers; returns the layer-0 entry.
    pub fn descend<S: FnMut(u32) -> f64>(&self, score: S, probe: &mut Probe) -> Result<u32> {
        Ok(self.descend_scored(score, probe)?.id)
    }

    /// [`descend`](Self::descend) keeping the entry's distance; each node is
    /// scored at most once.
    pub fn descend_scored<S: FnMut(u32) -> f64>(&self, mut score: S, probe: &mut Probe) -> Result<Neighbor> {
        let e = self.entry;
        let mut cur = Neighbor::new(e, probe.distance(e, || score(e)));
        for lc in (1..=self.max_level).rev() {
            let out = BeamSearch::new(1).run_from(&self.layer(lc), self.len(), &[cur], &mut score, probe)?;
            cur = out.results[0];
        }
        Ok(cur)
    }

    /// Layer-0 beam search of width `ef` after descent; results pass `filter`.
    pub fn search<S: FnMut(u32) -> f64>(
        &self,
        mut score: S,
        ef: usize,
        k: usize,
        filter: Option<&(dyn Fn(u32) -> bool + Sync)>,
        mode: FilterMode,
        probe: &mut Probe,
    ) -> Result<Vec<Neighbor>> {
        let entry = self.descend_scored(&mut score, probe)?;
        let mut search = BeamSearch::new(ef.max(k));
        if let Some(f) = filter {
            search = search.filter(f, mode);
        }
        let mut out = search.run_from(&self.layer(0), self.len(), &[entry], score, probe)?.results;
        out.truncate(k);
        Ok(out)
    }

    pub fn memory_bytes(&self) -> usize {
        let lists = |v: &Vec<u32>| v.capacity() * 4 + std::mem::size_of::<Vec<u32>>();
        self.layer0.iter().map(lists).sum::<usize>()
            + self.upper.iter().flatten().map(lists).sum::<usize>()
            + self.levels.len()
    }

    /// Assembles an index from stored parts, validating shape.
    pub(crate) fn from_parts(
        params: HnswParams,
        levels: Vec<u8>,
        layer0: Vec<Vec<u32>>,
        upper: Vec<Vec<Vec<u32>>>,
        entry: u32,
    ) -> Result<Self> {
        let n = layer0.len();
        if levels.len() != n || upper.len() != n || (n > 0 && entry as usize >= n) {
            return Err(Error::Build("inconsistent HNSW parts".into()));
        }
        let max_level = levels.get(entry as usize).copied().unwrap_or(0) as usize;
        Ok(Self {
            params,
            levels,
            layer0,
            upper,
            entry,
            max_level,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::l2;
    use crate::space::VectorSpace;
    use crate::types::Vectors;
    use rand_distr::{Distribution, Uniform};

    fn random_vectors(n: usize, d: usize, seed: u64) -> Vectors {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = Uniform::new(0.0f32, 1.0).unwrap();
        Vectors::from_flat(d, (0..n * d).map(|_| u.sample(&mut rng)).collect()).unwrap()
    }

    fn brute(v: &Vectors, q: &[f32], k: usize) -> Vec<u32> {
        let mut all: Vec<Neighbor> = (0..v.len() as u32).map(|i| Neighbor::new(i, l2(q, v.get(i as usize)))).collect();
        all.sort();
        all.truncate(k);
        all.iter().map(|n| n.id).collect()
    }

    #[test]
    fn single_point_is_its_own_entry() {
        let v = random_vectors(1, 4, 1);
        let h = Hnsw::build(&v, HnswParams::new(8, 16)).unwrap();
        assert_eq!(h.entry_point(), 0);
        let mut p = Probe::new();
        let r = h.search(|i| v.query_distance(&[0.0; 4], i), 10, 1, None, FilterMode::Strict, &mut p).unwrap();
        assert_eq!(r[0].id, 0);
    }

    #[test]
    fn empty_space_is_rejected() {
        assert!(Hnsw::build(&Vectors::new(3), HnswParams::default()).is_err());
    }

    #[test]
    fn small_planar_build_finds_exact_nearest() {
        let v = random_vectors(100, 2, 7);
        let h = Hnsw::build(&v, HnswParams::new(8, 64)).unwrap();
        let queries = random_vectors(50, 2, 8);
        for q in queries.iter() {
            let mut p = Probe::new();
            let r = h.search(|i| v.query_distance(q, i), 100, 1, None, FilterMode::Strict, &mut p).unwrap();
            assert_eq!(r[0].id, brute(&v, q, 1)[0]);
        }
    }

    #[test]
    fn degree_caps_hold_and_layers_nest() {
        for seed in 0..3 {
            let v = random_vectors(400, 3, seed);
            let h = Hnsw::build(&v, HnswParams::new(6, 32).with_seed(seed)).unwrap();
            for node in 0..h.len() as u32 {
                assert!(h.links(node, 0).len() <= 12);
                for l in 1..=h.level_of(node) {
                    assert!(h.links(node, l).len() <= 6);
                    for &w in h.links(node, l) {
                        assert!(h.level_of(w) >= l, "edge to a node absent from the layer");
                    }
                }
            }
        }
    }

    #[test]
    fn full_width_search_is_exact() {
        let v = random_vectors(300, 4, 3);
        let h = Hnsw::build(&v, HnswParams::new(8, 40)).unwrap();
        let q = [0.3f32, 0.6, 0.1, 0.9];
        let mut p = Probe::new();
        let r = h.search(|i| v.query_distance(&q, i), 300, 10, None, FilterMode::Strict, &mut p).unwrap();
        assert_eq!(r.iter().map(|n| n.id).collect::<Vec<_>>(), brute(&v, &q, 10));
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let v = random_vectors(200, 3, 5);
        let a = Hnsw::build(&v, HnswParams::new(6, 32)).unwrap();
        let b = Hnsw::build(&v, HnswParams::new(6, 32)).unwrap();
        assert_eq!(a, b);
    }
}
