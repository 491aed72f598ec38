//! Inverted-file index with optional product-quantized payloads.
//!
//! Coarse centroid distances are not counted as comparisons; only
//! distances to posting-list members are.

use super::kmeans::kmeans;
use super::pq::PqCodec;
use crate::distance::{l2, Probe};
use crate::error::{Error, Result};
use crate::types::{Neighbor, Vectors};

#[derive(Clone, Debug, PartialEq)]
pub struct IvfParams {
    pub nlist: usize,
    /// `(m, ksub)` for a PQ payload; raw vectors otherwise.
    pub pq: Option<(usize, usize)>,
    pub seed: u64,
}

impl IvfParams {
    pub fn flat(nlist: usize) -> Self {
        Self { nlist, pq: None, seed: 42 }
    }

    pub fn with_pq(nlist: usize, m: usize, ksub: usize) -> Self {
        Self {
            nlist,
            pq: Some((m, ksub)),
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IvfIndex {
    pub(crate) centroids: Vectors,
    pub(crate) lists: Vec<Vec<u32>>,
    pub(crate) pq: Option<PqCodec>,
    /// `m` bytes per id, id-major.
    pub(crate) codes: Vec<u8>,
    pub(crate) seed: u64,
}

impl IvfIndex {
    pub fn build(vectors: &Vectors, params: &IvfParams) -> Result<Self> {
        let n = vectors.len();
        if params.nlist == 0 || params.nlist > n {
            return Err(Error::config(format!("nlist = {} must be in 1..={n}", params.nlist)));
        }
        let km = kmeans(vectors, params.nlist, 20, params.seed)?;
        let mut lists = vec![Vec::new(); params.nlist];
        for (id, &c) in km.assignments.iter().enumerate() {
            lists[c as usize].push(id as u32);
        }
        let (pq, codes) = match params.pq {
            None => (None, Vec::new()),
            Some((m, ksub)) => {
                let pq = PqCodec::train(vectors, m, ksub, params.seed)?;
                let codes = vectors.iter().flat_map(|v| pq.encode(v)).collect();
                (Some(pq), codes)
            }
        };
        Ok(Self {
            centroids: km.centroids,
            lists,
            pq,
            codes,
            seed: params.seed,
        })
    }

    pub fn nlist(&self) -> usize {
        self.lists.len()
    }

    pub fn lists(&self) -> &[Vec<u32>] {
        &self.lists
    }

    pub fn centroids(&self) -> &Vectors {
        &self.centroids
    }

    pub fn pq(&self) -> Option<&PqCodec> {
        self.pq.as_ref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Posting lists of the `nprobe` closest centroids, closest first.
    pub fn probe_lists(&self, q: &[f32], nprobe: usize) -> Vec<u32> {
        let mut nprobe = nprobe.max(1);
        if nprobe > self.nlist() {
            log::warn!("nprobe {nprobe} exceeds nlist {}; clamping", self.nlist());
            nprobe = self.nlist();
        }
        let mut order: Vec<Neighbor> = self
            .centroids
            .iter()
            .enumerate()
            .map(|(c, row)| Neighbor::new(c as u32, l2(q, row)))
            .collect();
        order.select_nth_unstable(nprobe - 1);
        order.truncate(nprobe);
        order.sort();
        order.into_iter().map(|c| c.id).collect()
    }

    /// Scans the `nprobe` nearest lists; ids failing `filter` are skipped
    /// before any distance is computed.
    pub fn search(
        &self,
        vectors: &Vectors,
        q: &[f32],
        nprobe: usize,
        k: usize,
        filter: Option<&(dyn Fn(u32) -> bool + Sync)>,
        probe: &mut Probe,
    ) -> Result<Vec<Neighbor>> {
        if q.len() != vectors.dim() {
            return Err(Error::Dimension {
                expected: vectors.dim(),
                got: q.len(),
            });
        }
        let table = self.pq.as_ref().map(|pq| pq.adc_table(q));
        let m = self.pq.as_ref().map_or(0, PqCodec::m);
        let mut hits = Vec::new();
        for c in self.probe_lists(q, nprobe) {
            for &id in &self.lists[c as usize] {
                if filter.is_some_and(|f| !f(id)) {
                    continue;
                }
                let d = match (&self.pq, &table) {
                    (Some(pq), Some(t)) => {
                        let code = &self.codes[id as usize * m..(id as usize + 1) * m];
                        probe.distance(id, || pq.adc_lookup(t, code))
                    }
                    _ => probe.distance(id, || l2(q, vectors.get(id as usize))),
                };
                hits.push(Neighbor::new(id, d));
            }
        }
        hits.sort_unstable();
        hits.truncate(k);
        Ok(hits)
    }

    pub fn memory_bytes(&self) -> usize {
        self.centroids.memory_bytes()
            + self.lists.iter().map(|l| l.len() * 4).sum::<usize>()
            + self.codes.len()
            + self.pq.as_ref().map_or(0, PqCodec::memory_bytes)
    }

    /// Assembles an index from stored parts, validating that the lists
    /// partition the ids.
    pub(crate) fn from_parts(centroids: Vectors, lists: Vec<Vec<u32>>, pq: Option<PqCodec>, codes: Vec<u8>, seed: u64) -> Result<Self> {
        let n: usize = lists.iter().map(Vec::len).sum();
        let mut seen = vec![false; n];
        for &id in lists.iter().flatten() {
            let slot = seen.get_mut(id as usize).ok_or_else(|| Error::Build("posting id out of range".into()))?;
            if *slot {
                return Err(Error::Build("id in two posting lists".into()));
            }
            *slot = true;
        }
        if let Some(pq) = &pq {
            if codes.len() != n * pq.m() {
                return Err(Error::Build("PQ code length mismatch".into()));
            }
        }
        Ok(Self {
            centroids,
            lists,
            pq,
            codes,
            seed,
        })
    }
}
