//! Vamana: a randomly initialized regular graph refined by one pass of
//! search-and-prune with an alpha-relaxed RNG rule.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sampled_medoid;
use crate::distance::Probe;
use crate::error::{Error, Result};
use crate::graph::{prune_alpha, Adjacency, BeamSearch};
use crate::space::Space;
use crate::types::Neighbor;

#[derive(Clone, Debug, PartialEq)]
pub struct VamanaParams {
    /// Degree cap, also the initial random degree.
    pub m: usize,
    pub ef_construction: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl VamanaParams {
    pub fn new(m: usize, ef_construction: usize) -> Self {
        Self {
            m,
            ef_construction,
            alpha: 1.2,
            seed: 42,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vamana {
    pub(crate) adjacency: Adjacency,
    pub(crate) medoid: u32,
    pub(crate) params: VamanaParams,
}

impl Vamana {
    pub fn build<S: Space>(space: &S, params: VamanaParams) -> Result<Self> {
        let n = space.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if params.m == 0 {
            return Err(Error::config("Vamana degree cap must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let all: Vec<u32> = (0..n as u32).collect();
        let mut adj = Adjacency::new(n);
        let r0 = params.m.min(n - 1);
        for v in 0..n as u32 {
            let mut picks: Vec<u32> = Vec::with_capacity(r0);
            while picks.len() < r0 {
                let w = *all.choose(&mut rng).expect("n > 0");
                if w != v && !picks.contains(&w) {
                    picks.push(w);
                }
            }
            adj.lists[v as usize] = picks;
        }
        let medoid = sampled_medoid(space, &all, 100, &mut rng);

        let mut order = all.clone();
        order.shuffle(&mut rng);
        let mut probe = Probe::new();
        for &p in &order {
            let out = BeamSearch::new(params.ef_construction)
                .collect_expanded()
                .run(&adj, n, &[medoid], |j| space.distance(p, j), &mut probe)?;
            let mut pool = out.expanded;
            pool.extend(out.results);
            pool.extend(adj.get(p).iter().map(|&j| Neighbor::new(j, space.distance(p, j))));
            pool.sort();
            pool.dedup_by_key(|c| c.id);
            let kept = prune_alpha(p, &pool, params.m, params.alpha, |a, b| space.distance(a, b));
            adj.lists[p as usize] = kept.iter().map(|c| c.id).collect();
            for c in kept {
                insert_reverse(space, &mut adj, c.id, p, params.m, params.alpha);
            }
        }
        let g = Self {
            adjacency: adj,
            medoid,
            params,
        };
        let unreachable = g.adjacency.reachable_from(medoid).iter().filter(|&&r| !r).count();
        if unreachable > 0 {
            log::warn!("Vamana graph leaves {unreachable} nodes unreachable from the medoid");
        }
        Ok(g)
    }

    pub fn adjacency(&self) -> &Adjacency {
        &self.adjacency
    }

    pub fn medoid(&self) -> u32 {
        self.medoid
    }

    pub fn params(&self) -> &VamanaParams {
        &self.params
    }

    pub fn search<S: FnMut(u32) -> f64>(&self, score: S, ef: usize, k: usize, probe: &mut Probe) -> Result<Vec<Neighbor>> {
        let mut out = BeamSearch::new(ef.max(k))
            .run(&self.adjacency, self.adjacency.len(), &[self.medoid], score, probe)?
            .results;
        out.truncate(k);
        Ok(out)
    }

    pub fn memory_bytes(&self) -> usize {
        self.adjacency.memory_bytes()
    }
}

/// Adds `owner -> new`, re-pruning `owner` with the alpha rule on overflow.
pub(crate) fn insert_reverse<S: Space>(space: &S, adj: &mut Adjacency, owner: u32, new: u32, m: usize, alpha: f64) {
    let list = &mut adj.lists[owner as usize];
    if list.contains(&new) {
        return;
    }
    list.push(new);
    if list.len() <= m {
        return;
    }
    let mut cands: Vec<Neighbor> = list.iter().map(|&x| Neighbor::new(x, space.distance(owner, x))).collect();
    cands.sort();
    *list = prune_alpha(owner, &cands, m, alpha, |a, b| space.distance(a, b))
        .iter()
        .map(|c| c.id)
        .collect();
}
