//! Attribute-partitioned index: equal-count partitions in attribute order,
//! each with its own sub-index. Queries visit only the partitions whose
//! attribute bounds meet the predicate and scan those where few members
//! remain.

use super::MembershipBitmap;
use crate::base::{Hnsw, HnswParams, IvfIndex, IvfParams};
use crate::distance::{l2, Probe};
use crate::error::{Error, Result};
use crate::graph::FilterMode;
use crate::predicate::FilterPredicate;
use crate::space::{Subset, VectorSpace};
use crate::types::{AttributedDataset, Neighbor, SearchResult, Vectors};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubIndexKind {
    Hnsw,
    Ivf,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionParams {
    pub partitions: usize,
    pub kind: SubIndexKind,
    pub m: usize,
    pub ef_construction: usize,
    /// Lists per IVF sub-index, capped by partition size.
    pub nlist: usize,
    /// Scan a partition when its member fraction is below this.
    pub scan_threshold: f64,
    pub seed: u64,
}

impl PartitionParams {
    pub fn new(kind: SubIndexKind) -> Self {
        Self {
            partitions: 64,
            kind,
            m: 16,
            ef_construction: 200,
            nlist: 16,
            scan_threshold: 0.1,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum SubIndex {
    Hnsw(Hnsw),
    /// IVF over the partition's own rows.
    Ivf(IvfIndex, Vectors),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Partition {
    /// Global ids in rank order.
    pub ids: Vec<u32>,
    pub attr_lo: i64,
    pub attr_hi: i64,
    pub(crate) sub: SubIndex,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionedIndex {
    pub(crate) parts: Vec<Partition>,
    pub(crate) scan_threshold: f64,
}

impl PartitionedIndex {
    pub fn build(ds: &AttributedDataset, params: &PartitionParams) -> Result<Self> {
        let n = ds.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let p = params.partitions.clamp(1, n);
        let mut parts = Vec::with_capacity(p);
        for j in 0..p {
            let (lo, hi) = (j * n / p, (j + 1) * n / p);
            let ids: Vec<u32> = ds.attr_rank()[lo..hi].to_vec();
            let sub = match params.kind {
                SubIndexKind::Hnsw => {
                    let space = Subset::new(ds.vectors(), ids.as_slice());
                    let hp = HnswParams::new(params.m, params.ef_construction).with_seed(params.seed);
                    SubIndex::Hnsw(Hnsw::build(&space, hp)?)
                }
                SubIndexKind::Ivf => {
                    let local = ds.vectors().permuted(&ids);
                    let mut ip = IvfParams::flat(params.nlist.clamp(1, ids.len()));
                    ip.seed = params.seed;
                    SubIndex::Ivf(IvfIndex::build(&local, &ip)?, local)
                }
            };
            parts.push(Partition {
                attr_lo: ds.sorted_attrs()[lo],
                attr_hi: ds.sorted_attrs()[hi - 1],
                ids,
                sub,
            });
        }
        Ok(Self {
            parts,
            scan_threshold: params.scan_threshold,
        })
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.parts
    }

    /// Partitions whose attribute bounds intersect `[lo, hi]`.
    pub fn select_partitions(&self, lo: i64, hi: i64) -> Vec<usize> {
        self.parts
            .iter()
            .enumerate()
            .filter(|(_, p)| p.attr_lo <= hi && lo <= p.attr_hi)
            .map(|(i, _)| i)
            .collect()
    }

    /// `knob` is `ef` for graph sub-indexes and `nprobe` for IVF ones.
    pub fn search(
        &self,
        vectors: &Vectors,
        pred: &FilterPredicate,
        bitmap: &MembershipBitmap,
        q: &[f32],
        knob: usize,
        k: usize,
        probe: &mut Probe,
    ) -> Result<SearchResult> {
        super::strategies::check_dim(vectors, q)?;
        let Some((lo, hi)) = pred.attr_bounds() else {
            return Ok(SearchResult::empty(probe));
        };
        let mut hits: Vec<Neighbor> = Vec::new();
        for pi in self.select_partitions(lo, hi) {
            let part = &self.parts[pi];
            let members: Vec<u32> = (0..part.ids.len() as u32).filter(|&l| bitmap.contains(part.ids[l as usize])).collect();
            if members.is_empty() {
                continue;
            }
            let local_sel = members.len() as f64 / part.ids.len() as f64;
            if local_sel < self.scan_threshold {
                for &l in &members {
                    let g = part.ids[l as usize];
                    hits.push(Neighbor::new(g, probe.distance(g, || l2(q, vectors.get(g as usize)))));
                }
                continue;
            }
            let member = |l: u32| bitmap.contains(part.ids[l as usize]);
            let local = match &part.sub {
                SubIndex::Hnsw(h) => {
                    let space = Subset::new(vectors, part.ids.as_slice());
                    h.search(|l| space.query_distance(q, l), knob, k, Some(&member), FilterMode::Route, probe)?
                }
                SubIndex::Ivf(ivf, local) => ivf.search(local, q, knob, k, Some(&member), probe)?,
            };
            hits.extend(local.into_iter().map(|n| Neighbor::new(part.ids[n.id as usize], n.distance)));
        }
        Ok(SearchResult::from_hits(hits, k, probe))
    }

    pub fn memory_bytes(&self) -> usize {
        self.parts
            .iter()
            .map(|p| {
                p.ids.len() * 4
                    + match &p.sub {
                        SubIndex::Hnsw(h) => h.memory_bytes(),
                        SubIndex::Ivf(i, v) => i.memory_bytes() + v.memory_bytes(),
                    }
            })
            .sum()
    }
}
