//! Registry of benchmarkable methods: names, build parameters, a uniform
//! per-query search entry point and persistence hooks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::base::{Hnsw, HnswParams, IvfIndex, IvfParams, Vamana, VamanaParams};
use crate::distance::Probe;
use crate::error::{Error, Result};
use crate::filter::{
    joint_filter_search, post_filter_search, pre_filter_scan, Acorn, AcornParams, MembershipBitmap, PartitionParams,
    PartitionedIndex, SubIndexKind,
};
use crate::graph::{FilterMode, PruneStrategy};
use crate::label::{JointIndex, JointParams, JointVariant, LabelGraph, LabelGraphParams};
use crate::persist::StoredIndex;
use crate::predicate::FilterPredicate;
use crate::range::{
    RangeSearch, SegmentTree, SegmentTreeParams, SegmentedEdgeGraph, SegmentedEdgeParams, SegmentedHnsw,
    SegmentedHnswParams, TreeMode,
};
use crate::types::{AttributedDataset, FilteredQuery, SearchResult};

/// Predicate shapes a method can serve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    Range,
    Label,
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "range" => Ok(Self::Range),
            "label" => Ok(Self::Label),
            _ => Err(Error::Parse(format!("unknown filter kind {s:?}"))),
        }
    }
}

macro_rules! methods {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Method {
            $($variant),+
        }

        impl Method {
            pub const ALL: &'static [Method] = &[$(Method::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $(Method::$variant => $name),+
                }
            }
        }

        impl FromStr for Method {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(Method::$variant),)+
                    _ => Err(Error::Parse(format!("unknown method {s:?}"))),
                }
            }
        }
    };
}

methods! {
    PreFilter => "prefilter",
    PostFilterHnsw => "postfilter-hnsw",
    JointHnsw => "joint-hnsw",
    PostFilterVamana => "postfilter-vamana",
    JointVamana => "joint-vamana",
    IvfFilter => "ivf-filter",
    IvfPqFilter => "ivfpq-filter",
    Acorn => "acorn",
    PartitionedHnsw => "partitioned-hnsw",
    PartitionedIvf => "partitioned-ivf",
    SegmentedEdge => "segmented-edge",
    TreeMerge => "tree-merge",
    TreeFused => "tree-fused",
    SegmentedHnsw => "segmented-hnsw",
    FilteredVamana => "filtered-vamana",
    StitchedVamana => "stitched-vamana",
    NhqKeepNearest => "nhq-kn",
    NhqNsw => "nhq-nsw",
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Method {
    pub fn supports(self, kind: FilterKind) -> bool {
        use Method::*;
        match self {
            PartitionedHnsw | PartitionedIvf | SegmentedEdge | TreeMerge | TreeFused | SegmentedHnsw => kind == FilterKind::Range,
            FilteredVamana | StitchedVamana | NhqKeepNearest | NhqNsw => kind == FilterKind::Label,
            _ => true,
        }
    }

    /// Whether returned ids may fail the predicate by construction.
    pub fn approximate_predicate(self) -> bool {
        matches!(self, Method::NhqKeepNearest | Method::NhqNsw)
    }

    /// Whether the build takes a pruning rule.
    pub fn accepts_prune(self) -> bool {
        matches!(
            self,
            Method::PostFilterHnsw | Method::JointHnsw | Method::Acorn | Method::SegmentedEdge | Method::NhqNsw
        )
    }

    /// Whether the search knob is an IVF probe count rather than a beam width.
    pub fn knob_is_nprobe(self) -> bool {
        matches!(self, Method::IvfFilter | Method::IvfPqFilter | Method::PartitionedIvf)
    }
}

/// Build parameters shared across methods; each method reads the fields it
/// needs. Keys accept the short names `M`, `S` and `B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodConfig {
    #[serde(alias = "M")]
    pub m: usize,
    pub ef_construction: usize,
    /// Segment count of the segmented HNSW.
    #[serde(alias = "S")]
    pub segments: usize,
    /// Leaf bucket of the segment tree.
    #[serde(alias = "B")]
    pub bucket: usize,
    pub sel_low: f64,
    pub sel_high: f64,
    pub partitions: usize,
    pub scan_threshold: f64,
    pub nlist: usize,
    pub pq_m: usize,
    pub pq_ksub: usize,
    pub ep_count: usize,
    pub alpha: f64,
    /// `None` means `M / 2`.
    pub tau: Option<usize>,
    /// `None` derives the penalty from the data.
    pub w2: Option<f64>,
    /// Overrides the method's own rule where it takes one.
    pub prune: Option<String>,
    pub seed: u64,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            m: 16,
            ef_construction: 200,
            segments: 8,
            bucket: 64,
            sel_low: 0.005,
            sel_high: 0.5,
            partitions: 64,
            scan_threshold: 0.1,
            nlist: 100,
            pq_m: 8,
            pq_ksub: 256,
            ep_count: 3,
            alpha: 1.2,
            tau: None,
            w2: None,
            prune: None,
            seed: 42,
        }
    }
}

impl MethodConfig {
    pub fn prune_override(&self) -> Result<Option<PruneStrategy>> {
        self.prune.as_deref().map(str::parse).transpose()
    }
}

/// A built index of any registered method.
pub enum BuiltIndex {
    PreFilter,
    PostFilterHnsw(Hnsw),
    JointHnsw(Hnsw),
    PostFilterVamana(Vamana),
    JointVamana(Vamana),
    Ivf(IvfIndex),
    Acorn(Acorn),
    Partitioned(PartitionedIndex),
    SegmentedEdge(SegmentedEdgeGraph),
    Tree(SegmentTree),
    SegmentedHnsw(SegmentedHnsw),
    LabelGraph(LabelGraph),
    Nhq(JointIndex),
}

impl BuiltIndex {
    pub fn build(method: Method, ds: &AttributedDataset, cfg: &MethodConfig) -> Result<Self> {
        if ds.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let prune = cfg.prune_override()?;
        let v = ds.vectors();
        let hnsw = |default: PruneStrategy| -> Result<Hnsw> {
            let rule = prune.unwrap_or(default);
            let hp = HnswParams::new(cfg.m, cfg.ef_construction).with_prune(rule).with_seed(cfg.seed);
            let labels = matches!(rule, PruneStrategy::LabelCovered { .. }).then(|| ds.label_sets());
            Hnsw::build_with_labels(v, hp, labels)
        };
        let vamana = || {
            let mut p = VamanaParams::new(cfg.m, cfg.ef_construction);
            p.alpha = cfg.alpha;
            p.seed = cfg.seed;
            Vamana::build(v, p)
        };
        let ivf = |pq: bool| {
            let nlist = cfg.nlist.clamp(1, ds.len());
            let mut p = if pq {
                IvfParams::with_pq(nlist, cfg.pq_m, cfg.pq_ksub.min(ds.len()))
            } else {
                IvfParams::flat(nlist)
            };
            p.seed = cfg.seed;
            IvfIndex::build(v, &p)
        };
        let partitioned = |kind| {
            let mut p = PartitionParams::new(kind);
            p.partitions = cfg.partitions;
            p.m = cfg.m;
            p.ef_construction = cfg.ef_construction;
            p.nlist = cfg.nlist;
            p.scan_threshold = cfg.scan_threshold;
            p.seed = cfg.seed;
            PartitionedIndex::build(ds, &p)
        };
        let tree = |mode| {
            let mut p = SegmentTreeParams::new(cfg.m, cfg.ef_construction);
            p.bucket = cfg.bucket;
            p.mode = mode;
            p.seed = cfg.seed;
            SegmentTree::build(ds, p)
        };
        let label_params = || {
            let mut p = LabelGraphParams::new(cfg.m, cfg.ef_construction);
            p.alpha = cfg.alpha;
            p.seed = cfg.seed;
            p
        };
        let nhq = |variant| {
            let mut p = JointParams::new(cfg.m, cfg.ef_construction, variant);
            p.w2 = cfg.w2;
            p.seed = cfg.seed;
            JointIndex::build(ds, &p)
        };
        Ok(match method {
            Method::PreFilter => Self::PreFilter,
            Method::PostFilterHnsw => Self::PostFilterHnsw(hnsw(PruneStrategy::RNG)?),
            Method::JointHnsw => Self::JointHnsw(hnsw(PruneStrategy::RNG)?),
            Method::PostFilterVamana => Self::PostFilterVamana(vamana()?),
            Method::JointVamana => Self::JointVamana(vamana()?),
            Method::IvfFilter => Self::Ivf(ivf(false)?),
            Method::IvfPqFilter => Self::Ivf(ivf(true)?),
            Method::Acorn => {
                let mut p = AcornParams::new(cfg.m, cfg.ef_construction);
                p.tau = cfg.tau.unwrap_or(cfg.m / 2);
                p.prune = prune.unwrap_or(p.prune);
                p.seed = cfg.seed;
                Self::Acorn(Acorn::build(v, &p)?)
            }
            Method::PartitionedHnsw => Self::Partitioned(partitioned(SubIndexKind::Hnsw)?),
            Method::PartitionedIvf => Self::Partitioned(partitioned(SubIndexKind::Ivf)?),
            Method::SegmentedEdge => {
                let mut p = SegmentedEdgeParams::new(cfg.m, cfg.ef_construction);
                p.ep_count = cfg.ep_count;
                p.prune = prune.unwrap_or(p.prune);
                Self::SegmentedEdge(SegmentedEdgeGraph::build(ds, p)?)
            }
            Method::TreeMerge => Self::Tree(tree(TreeMode::Merge)?),
            Method::TreeFused => Self::Tree(tree(TreeMode::Fused)?),
            Method::SegmentedHnsw => {
                let mut p = SegmentedHnswParams::new(cfg.m, cfg.ef_construction);
                p.segments = cfg.segments;
                p.sel_low = cfg.sel_low;
                p.sel_high = cfg.sel_high;
                p.seed = cfg.seed;
                Self::SegmentedHnsw(SegmentedHnsw::build(ds, p)?)
            }
            Method::FilteredVamana => Self::LabelGraph(LabelGraph::build_filtered(ds, &label_params())?),
            Method::StitchedVamana => Self::LabelGraph(LabelGraph::build_stitched(ds, &label_params())?),
            Method::NhqKeepNearest => Self::Nhq(nhq(JointVariant::KeepNearest)?),
            Method::NhqNsw => Self::Nhq(nhq(JointVariant::Nsw)?),
        })
    }

    /// One filtered query. `knob` is the beam width, or the probe count for
    /// IVF-backed methods; the pre-filter scan ignores it.
    pub fn search(&self, ds: &AttributedDataset, query: &FilteredQuery, knob: usize, probe: &mut Probe) -> Result<SearchResult> {
        let (q, k, pred) = (query.vector.as_slice(), query.k, &query.predicate);
        let v = ds.vectors();
        let bitmap = || MembershipBitmap::compile(pred, ds);
        match self {
            Self::PreFilter => pre_filter_scan(v, &bitmap(), q, k, probe),
            Self::PostFilterHnsw(h) => post_filter_search(h, v, &bitmap(), q, knob, k, probe),
            Self::JointHnsw(h) => joint_filter_search(h, v, &bitmap(), q, knob, k, FilterMode::Strict, probe),
            Self::PostFilterVamana(g) => post_filter_search(g, v, &bitmap(), q, knob, k, probe),
            Self::JointVamana(g) => joint_filter_search(g, v, &bitmap(), q, knob, k, FilterMode::Strict, probe),
            Self::Ivf(ivf) => {
                let b = bitmap();
                let member = |id: u32| b.contains(id);
                let hits = ivf.search(v, q, knob, k, Some(&member), probe)?;
                Ok(SearchResult::from_hits(hits, k, probe))
            }
            Self::Acorn(a) => a.search(v, &bitmap(), q, knob, k, probe),
            Self::Partitioned(p) => p.search(v, pred, &bitmap(), q, knob, k, probe),
            Self::SegmentedEdge(g) => range_search(g, ds, query, knob, probe),
            Self::Tree(t) => range_search(t, ds, query, knob, probe),
            Self::SegmentedHnsw(s) => range_search(s, ds, query, knob, probe),
            Self::LabelGraph(g) => g.search(v, q, label_of(pred)?, knob, k, probe),
            Self::Nhq(j) => j.search(v, q, &[label_of(pred)?], knob, k, probe),
        }
    }

    pub fn memory_bytes(&self) -> usize {
        match self {
            Self::PreFilter => 0,
            Self::PostFilterHnsw(h) | Self::JointHnsw(h) => h.memory_bytes(),
            Self::PostFilterVamana(g) | Self::JointVamana(g) => g.memory_bytes(),
            Self::Ivf(i) => i.memory_bytes(),
            Self::Acorn(a) => a.memory_bytes(),
            Self::Partitioned(p) => p.memory_bytes(),
            Self::SegmentedEdge(g) => g.memory_bytes(),
            Self::Tree(t) => t.memory_bytes(),
            Self::SegmentedHnsw(s) => s.memory_bytes(),
            Self::LabelGraph(g) => g.memory_bytes(),
            Self::Nhq(j) => j.memory_bytes(),
        }
    }

    /// Sets the segmented-edge entry count; `false` for other methods.
    pub fn set_ep_count(&mut self, ep: usize) -> bool {
        match self {
            Self::SegmentedEdge(g) => {
                g.set_ep_count(ep);
                true
            }
            _ => false,
        }
    }

    /// Persistable form, if the method has one.
    pub fn to_stored(&self, cfg: &MethodConfig) -> Option<StoredIndex> {
        Some(match self {
            Self::PostFilterHnsw(h) | Self::JointHnsw(h) => StoredIndex::Hnsw(h.clone()),
            Self::PostFilterVamana(g) | Self::JointVamana(g) => StoredIndex::Vamana(g.clone()),
            Self::Ivf(i) => StoredIndex::Ivf(i.clone()),
            Self::Acorn(a) => StoredIndex::Acorn(a.clone()),
            Self::SegmentedEdge(g) => StoredIndex::SegmentedEdge(g.clone()),
            Self::Tree(t) => StoredIndex::SegmentTree(t.clone()),
            Self::SegmentedHnsw(s) => StoredIndex::SegmentedHnsw(s.clone()),
            Self::LabelGraph(g) => {
                let mut p = LabelGraphParams::new(cfg.m, cfg.ef_construction);
                p.alpha = cfg.alpha;
                p.seed = cfg.seed;
                StoredIndex::LabelGraph(g.clone(), p)
            }
            Self::PreFilter | Self::Partitioned(_) | Self::Nhq(_) => return None,
        })
    }

    /// Rebuilds the method's index from a stored one of a compatible kind.
    pub fn from_stored(method: Method, stored: StoredIndex) -> Result<Self> {
        use Method::*;
        Ok(match (method, stored) {
            (PostFilterHnsw, StoredIndex::Hnsw(h)) => Self::PostFilterHnsw(h),
            (JointHnsw, StoredIndex::Hnsw(h)) => Self::JointHnsw(h),
            (PostFilterVamana, StoredIndex::Vamana(g)) => Self::PostFilterVamana(g),
            (JointVamana, StoredIndex::Vamana(g)) => Self::JointVamana(g),
            (IvfFilter | IvfPqFilter, StoredIndex::Ivf(i)) => Self::Ivf(i),
            (Acorn, StoredIndex::Acorn(a)) => Self::Acorn(a),
            (SegmentedEdge, StoredIndex::SegmentedEdge(g)) => Self::SegmentedEdge(g),
            (TreeMerge, StoredIndex::SegmentTree(mut t)) => {
                t.set_mode(TreeMode::Merge);
                Self::Tree(t)
            }
            (TreeFused, StoredIndex::SegmentTree(mut t)) => {
                t.set_mode(TreeMode::Fused);
                Self::Tree(t)
            }
            (SegmentedHnsw, StoredIndex::SegmentedHnsw(s)) => Self::SegmentedHnsw(s),
            (FilteredVamana | StitchedVamana, StoredIndex::LabelGraph(g, _)) => Self::LabelGraph(g),
            (m, s) => return Err(Error::config(format!("{m} cannot load a stored {:?} index", s.kind()))),
        })
    }
}

fn range_search<R: RangeSearch>(index: &R, ds: &AttributedDataset, query: &FilteredQuery, ef: usize, probe: &mut Probe) -> Result<SearchResult> {
    let (lo, hi) = query
        .predicate
        .as_range()
        .ok_or_else(|| Error::config(format!("range index given predicate {}", query.predicate)))?;
    index.search_range(ds, &query.vector, lo, hi, ef, query.k, probe)
}

fn label_of(pred: &FilterPredicate) -> Result<u32> {
    pred.as_label().ok_or_else(|| Error::config(format!("label index given predicate {pred}")))
}
