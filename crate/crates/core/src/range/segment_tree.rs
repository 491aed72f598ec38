//! Binary tree over attribute ranks with one proximity graph per node.
//!
//! A query range decomposes into its canonical cover: the maximal tree
//! nodes inside the range plus, when the range cuts through a leaf bucket,
//! the in-range part of that leaf. Merge mode searches each covered graph
//! separately; fused mode runs one beam search in which a node's neighbors
//! come from whichever cover piece holds it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{rank_distance, ranks_to_result, scan_ranks, RangeSearch};
use crate::base::{sampled_medoid, Hnsw, HnswParams};
use crate::distance::Probe;
use crate::error::{Error, Result};
use crate::graph::{Adjacency, AdjacencyView, BeamSearch, PruneStrategy};
use crate::space::Subset;
use crate::types::{AttributedDataset, Neighbor, SearchResult};

const MEDOID_SAMPLE: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeMode {
    Merge,
    Fused,
}

impl std::str::FromStr for TreeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "merge" => Ok(Self::Merge),
            "fused" => Ok(Self::Fused),
            _ => Err(Error::Parse(format!("unknown tree mode `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentTreeParams {
    /// Leaf bucket size.
    pub bucket: usize,
    pub m: usize,
    pub ef_construction: usize,
    pub mode: TreeMode,
    pub seed: u64,
}

impl SegmentTreeParams {
    pub fn new(m: usize, ef_construction: usize) -> Self {
        Self {
            bucket: 64,
            m,
            ef_construction,
            mode: TreeMode::Fused,
            seed: 42,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    /// Inclusive rank interval.
    pub lo: u32,
    pub hi: u32,
    pub left: Option<u32>,
    pub right: Option<u32>,
    /// Adjacency over local ids `0..=hi - lo`.
    pub graph: Adjacency,
    /// Local id.
    pub medoid: u32,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.left.is_none()
    }

    pub fn size(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }
}

/// One part of a canonical cover.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Piece {
    Node(u32),
    /// In-range ranks `[lo, hi]` of a leaf the range only partly covers.
    Partial { leaf: u32, lo: u32, hi: u32 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentTree {
    pub(crate) params: SegmentTreeParams,
    /// Preorder; the root is node 0.
    pub(crate) nodes: Vec<TreeNode>,
}

impl SegmentTree {
    pub fn build(ds: &AttributedDataset, params: SegmentTreeParams) -> Result<Self> {
        if ds.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if params.bucket == 0 {
            return Err(Error::config("segment tree bucket size must be positive"));
        }
        let mut tree = Self {
            params,
            nodes: Vec::new(),
        };
        tree.build_node(ds, 0, ds.len() as u32 - 1)?;
        Ok(tree)
    }

    fn build_node(&mut self, ds: &AttributedDataset, lo: u32, hi: u32) -> Result<u32> {
        let idx = self.nodes.len() as u32;
        let ids = &ds.attr_rank()[lo as usize..=hi as usize];
        let space = Subset::new(ds.vectors(), ids);
        let hp = HnswParams::new(self.params.m, self.params.ef_construction)
            .flat()
            .with_m_max0(self.params.m)
            .with_prune(PruneStrategy::RNG)
            .with_seed(self.params.seed ^ idx as u64);
        let hnsw = Hnsw::build(&space, hp)?;
        let local: Vec<u32> = (0..ids.len() as u32).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed.wrapping_add(idx as u64));
        let medoid = sampled_medoid(&space, &local, MEDOID_SAMPLE, &mut rng);
        self.nodes.push(TreeNode {
            lo,
            hi,
            left: None,
            right: None,
            graph: Adjacency { lists: hnsw.layer0 },
            medoid,
        });
        if (hi - lo + 1) as usize > self.params.bucket {
            let mid = split_point(lo, hi, self.params.bucket as u32);
            let left = self.build_node(ds, lo, mid)?;
            let right = self.build_node(ds, mid + 1, hi)?;
            self.nodes[idx as usize].left = Some(left);
            self.nodes[idx as usize].right = Some(right);
        }
        Ok(idx)
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn params(&self) -> &SegmentTreeParams {
        &self.params
    }

    pub fn set_mode(&mut self, mode: TreeMode) {
        self.params.mode = mode;
    }

    pub fn len(&self) -> usize {
        self.nodes[0].size()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cover of ranks `[l, u]`, ordered by rank.
    pub fn cover(&self, l: usize, u: usize) -> Vec<Piece> {
        let mut out = Vec::new();
        if l <= u && u < self.len() {
            self.cover_into(0, l as u32, u as u32, &mut out);
        }
        out
    }

    fn cover_into(&self, idx: u32, l: u32, u: u32, out: &mut Vec<Piece>) {
        let node = &self.nodes[idx as usize];
        if u < node.lo || node.hi < l {
            return;
        }
        if l <= node.lo && node.hi <= u {
            out.push(Piece::Node(idx));
            return;
        }
        match (node.left, node.right) {
            (Some(a), Some(b)) => {
                self.cover_into(a, l, u, out);
                self.cover_into(b, l, u, out);
            }
            _ => out.push(Piece::Partial {
                leaf: idx,
                lo: l.max(node.lo),
                hi: u.min(node.hi),
            }),
        }
    }

    pub fn piece_bounds(&self, p: Piece) -> (u32, u32) {
        match p {
            Piece::Node(i) => (self.nodes[i as usize].lo, self.nodes[i as usize].hi),
            Piece::Partial { lo, hi, .. } => (lo, hi),
        }
    }

    pub fn memory_bytes(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| n.graph.memory_bytes() + std::mem::size_of::<TreeNode>())
            .sum()
    }

    fn search_merge(&self, ds: &AttributedDataset, q: &[f32], cover: &[Piece], ef: usize, k: usize, probe: &mut Probe) -> Result<Vec<Neighbor>> {
        let mut hits = Vec::new();
        for &p in cover {
            match p {
                Piece::Node(i) => {
                    let node = &self.nodes[i as usize];
                    let out = BeamSearch::new(ef.max(k)).run(
                        &node.graph,
                        node.size(),
                        &[node.medoid],
                        |v| rank_distance(ds, q, node.lo + v),
                        probe,
                    )?;
                    hits.extend(out.results.into_iter().map(|h| Neighbor::new(node.lo + h.id, h.distance)));
                }
                Piece::Partial { lo, hi, .. } => hits.extend(scan_ranks(ds, q, lo as usize, hi as usize, probe)),
            }
        }
        Ok(hits)
    }

    fn search_fused(&self, ds: &AttributedDataset, q: &[f32], cover: &[Piece], ef: usize, k: usize, probe: &mut Probe) -> Result<Vec<Neighbor>> {
        let entries: Vec<u32> = cover
            .iter()
            .map(|&p| match p {
                Piece::Node(i) => self.nodes[i as usize].lo + self.nodes[i as usize].medoid,
                Piece::Partial { lo, hi, .. } => lo + (hi - lo) / 2,
            })
            .collect();
        let view = FusedView { tree: self, cover };
        let out = BeamSearch::new(ef.max(k)).run(&view, self.len(), &entries, |r| rank_distance(ds, q, r), probe)?;
        Ok(out.results)
    }
}

/// Last rank of the left child: half the buckets, rounded up, go left, so
/// only the rightmost leaf can be short.
fn split_point(lo: u32, hi: u32, bucket: u32) -> u32 {
    let buckets = (hi - lo + 1).div_ceil(bucket);
    lo + buckets.div_ceil(2) * bucket - 1
}

/// Global-rank adjacency: a rank's neighbors come from the cover piece that
/// contains it; partial leaves are fully connected.
struct FusedView<'a> {
    tree: &'a SegmentTree,
    cover: &'a [Piece],
}

impl AdjacencyView for FusedView<'_> {
    fn neighbors(&self, rank: u32, out: &mut Vec<u32>) {
        let at = self.cover.partition_point(|&p| self.tree.piece_bounds(p).1 < rank);
        let Some(&piece) = self.cover.get(at) else {
            return;
        };
        match piece {
            Piece::Node(i) => {
                let node = &self.tree.nodes[i as usize];
                out.extend(node.graph.lists[(rank - node.lo) as usize].iter().map(|&v| node.lo + v));
            }
            Piece::Partial { lo, hi, .. } => out.extend((lo..=hi).filter(|&r| r != rank)),
        }
    }
}

impl RangeSearch for SegmentTree {
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
        let cover = self.cover(l, u);
        if cover.is_empty() {
            return Err(Error::NoEntry);
        }
        let hits = match self.params.mode {
            TreeMode::Merge => self.search_merge(ds, q, &cover, ef, k, probe)?,
            TreeMode::Fused => self.search_fused(ds, q, &cover, ef, k, probe)?,
        };
        Ok(ranks_to_result(ds, hits, k, probe))
    }
}
