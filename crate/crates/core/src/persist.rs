//! Versioned binary container for built indexes.
//!
//! Layout: magic `FANN`, format version, index kind, `n`, `d`, `M`, then a
//! kind-specific body. Adjacency lists are a LEB128 length followed by
//! zigzag LEB128 deltas, the first taken from the owning node. Vectors and
//! PQ codebooks are raw little-endian `f32`. All integers are little-endian.

use std::collections::BTreeMap;
use std::path::Path;

use crate::base::{Hnsw, HnswParams, IvfIndex, PqCodec, Vamana, VamanaParams};
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::filter::Acorn;
use crate::graph::{Adjacency, PruneStrategy};
use crate::label::{LabelGraph, LabelGraphParams};
use crate::range::{SegEdge, SegmentTree, SegmentTreeParams, SegmentedEdgeGraph, SegmentedEdgeParams, SegmentedHnsw, SegmentedHnswParams, TreeMode, TreeNode};
use crate::types::Vectors;

const MAGIC: &[u8; 4] = b"FANN";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum IndexKind {
    Hnsw = 1,
    Vamana = 2,
    Ivf = 3,
    Acorn = 4,
    SegmentedEdge = 5,
    SegmentTree = 6,
    SegmentedHnsw = 7,
    LabelGraph = 8,
}

impl IndexKind {
    fn from_u8(x: u8, at: u64) -> Result<Self> {
        Ok(match x {
            1 => Self::Hnsw,
            2 => Self::Vamana,
            3 => Self::Ivf,
            4 => Self::Acorn,
            5 => Self::SegmentedEdge,
            6 => Self::SegmentTree,
            7 => Self::SegmentedHnsw,
            8 => Self::LabelGraph,
            _ => return Err(Error::format(at, format!("unknown index kind {x}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Header {
    pub version: u32,
    pub kind: IndexKind,
    pub n: u64,
    pub d: u32,
    pub m: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StoredIndex {
    Hnsw(Hnsw),
    Vamana(Vamana),
    Ivf(IvfIndex),
    Acorn(Acorn),
    SegmentedEdge(SegmentedEdgeGraph),
    SegmentTree(SegmentTree),
    SegmentedHnsw(SegmentedHnsw),
    LabelGraph(LabelGraph, LabelGraphParams),
}

impl StoredIndex {
    pub fn kind(&self) -> IndexKind {
        match self {
            Self::Hnsw(_) => IndexKind::Hnsw,
            Self::Vamana(_) => IndexKind::Vamana,
            Self::Ivf(_) => IndexKind::Ivf,
            Self::Acorn(_) => IndexKind::Acorn,
            Self::SegmentedEdge(_) => IndexKind::SegmentedEdge,
            Self::SegmentTree(_) => IndexKind::SegmentTree,
            Self::SegmentedHnsw(_) => IndexKind::SegmentedHnsw,
            Self::LabelGraph(..) => IndexKind::LabelGraph,
        }
    }

    fn n_and_m(&self) -> (usize, usize) {
        match self {
            Self::Hnsw(h) => (h.len(), h.params().m),
            Self::Vamana(v) => (v.adjacency().len(), v.params().m),
            Self::Ivf(i) => (i.lists().iter().map(Vec::len).sum(), 0),
            Self::Acorn(a) => (a.graph().len(), a.graph().params().m),
            Self::SegmentedEdge(g) => (g.len(), g.params().m),
            Self::SegmentTree(t) => (t.len(), t.params().m),
            Self::SegmentedHnsw(s) => (s.len(), s.params().m),
            Self::LabelGraph(g, p) => (g.len(), p.m),
        }
    }
}

pub fn to_bytes(index: &StoredIndex, d: usize) -> Vec<u8> {
    let mut w = ByteWriter::default();
    let (n, m) = index.n_and_m();
    w.bytes(MAGIC);
    w.u32(FORMAT_VERSION);
    w.u8(index.kind() as u8);
    w.u64(n as u64);
    w.u32(d as u32);
    w.u32(m as u32);
    match index {
        StoredIndex::Hnsw(h) => put_hnsw(&mut w, h),
        StoredIndex::Vamana(v) => {
            put_vamana_params(&mut w, v.params());
            w.u32(v.medoid());
            put_adjacency(&mut w, &v.adjacency().lists);
        }
        StoredIndex::Ivf(i) => put_ivf(&mut w, i),
        StoredIndex::Acorn(a) => {
            w.u64(a.tau() as u64);
            put_hnsw(&mut w, a.graph());
        }
        StoredIndex::SegmentedEdge(g) => put_segmented_edge(&mut w, g),
        StoredIndex::SegmentTree(t) => put_tree(&mut w, t),
        StoredIndex::SegmentedHnsw(s) => put_segmented_hnsw(&mut w, s),
        StoredIndex::LabelGraph(g, p) => put_label_graph(&mut w, g, p),
    }
    w.buf
}

pub fn from_bytes(buf: &[u8]) -> Result<(Header, StoredIndex)> {
    let mut r = ByteReader::new(buf);
    let header = get_header(&mut r)?;
    let n = header.n as usize;
    let index = match header.kind {
        IndexKind::Hnsw => StoredIndex::Hnsw(get_hnsw(&mut r, n)?),
        IndexKind::Vamana => {
            let params = get_vamana_params(&mut r)?;
            let medoid = get_id(&mut r, n)?;
            let adjacency = Adjacency { lists: get_adjacency(&mut r, n, n)? };
            StoredIndex::Vamana(Vamana { adjacency, medoid, params })
        }
        IndexKind::Ivf => StoredIndex::Ivf(get_ivf(&mut r, n, header.d as usize)?),
        IndexKind::Acorn => {
            let tau = r.u64()? as usize;
            StoredIndex::Acorn(Acorn::from_graph(get_hnsw(&mut r, n)?, tau))
        }
        IndexKind::SegmentedEdge => StoredIndex::SegmentedEdge(get_segmented_edge(&mut r, n)?),
        IndexKind::SegmentTree => StoredIndex::SegmentTree(get_tree(&mut r, n)?),
        IndexKind::SegmentedHnsw => StoredIndex::SegmentedHnsw(get_segmented_hnsw(&mut r, n)?),
        IndexKind::LabelGraph => {
            let (g, p) = get_label_graph(&mut r, n)?;
            StoredIndex::LabelGraph(g, p)
        }
    };
    if !r.is_empty() {
        return Err(Error::format(r.offset(), "trailing bytes"));
    }
    Ok((header, index))
}

pub fn save(path: &Path, index: &StoredIndex, d: usize) -> Result<()> {
    std::fs::write(path, to_bytes(index, d))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(Header, StoredIndex)> {
    from_bytes(&std::fs::read(path)?)
}

/// Reads only the header.
pub fn read_header(path: &Path) -> Result<Header> {
    let buf = std::fs::read(path)?;
    get_header(&mut ByteReader::new(&buf))
}

fn get_header(r: &mut ByteReader) -> Result<Header> {
    r.expect(MAGIC)?;
    let at = r.offset();
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::format(at, format!("unsupported format version {version}")));
    }
    let at = r.offset();
    let kind = IndexKind::from_u8(r.u8()?, at)?;
    Ok(Header {
        version,
        kind,
        n: r.u64()?,
        d: r.u32()?,
        m: r.u32()?,
    })
}

fn get_id(r: &mut ByteReader, n: usize) -> Result<u32> {
    let at = r.offset();
    let v = r.u32()?;
    if v as usize >= n.max(1) {
        return Err(Error::format(at, format!("id {v} out of range for {n} nodes")));
    }
    Ok(v)
}

fn get_count(r: &mut ByteReader, max: usize) -> Result<usize> {
    let at = r.offset();
    let v = r.uleb()?;
    if v > max as u64 {
        return Err(Error::format(at, format!("count {v} exceeds {max}")));
    }
    Ok(v as usize)
}

fn put_list(w: &mut ByteWriter, owner: u32, list: &[u32]) {
    w.uleb(list.len() as u64);
    let mut prev = owner as i64;
    for &x in list {
        w.sleb(x as i64 - prev);
        prev = x as i64;
    }
}

fn get_list(r: &mut ByteReader, owner: u32, targets: usize) -> Result<Vec<u32>> {
    let len = get_count(r, targets)?;
    let mut prev = owner as i64;
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let at = r.offset();
        let x = prev + r.sleb()?;
        if x < 0 || x as usize >= targets {
            return Err(Error::format(at, format!("neighbor {x} out of range for {targets} nodes")));
        }
        out.push(x as u32);
        prev = x;
    }
    Ok(out)
}

fn put_adjacency(w: &mut ByteWriter, lists: &[Vec<u32>]) {
    for (v, list) in lists.iter().enumerate() {
        put_list(w, v as u32, list);
    }
}

fn get_adjacency(r: &mut ByteReader, nodes: usize, targets: usize) -> Result<Vec<Vec<u32>>> {
    (0..nodes as u32).map(|v| get_list(r, v, targets)).collect()
}

fn put_vectors(w: &mut ByteWriter, v: &Vectors) {
    w.u32(v.dim() as u32);
    w.u64(v.len() as u64);
    for &x in v.as_flat() {
        w.f32(x);
    }
}

fn get_vectors(r: &mut ByteReader) -> Result<Vectors> {
    let dim = r.u32()? as usize;
    let at = r.offset();
    let len = r.u64()? as usize;
    let total = len.checked_mul(dim).filter(|&t| t.saturating_mul(4) <= r.remaining()).ok_or_else(|| Error::format(at, "vector block larger than file"))?;
    let data = (0..total).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
    if dim == 0 {
        return Ok(Vectors::new(0));
    }
    Vectors::from_flat(dim, data)
}

fn put_prune(w: &mut ByteWriter, p: PruneStrategy) {
    match p {
        PruneStrategy::Rng { alpha } => {
            w.u8(0);
            w.f64(alpha);
        }
        PruneStrategy::TwoHop => w.u8(1),
        PruneStrategy::LabelCovered { alpha } => {
            w.u8(2);
            w.f64(alpha);
        }
        PruneStrategy::KeepNearest => w.u8(3),
    }
}

fn get_prune(r: &mut ByteReader) -> Result<PruneStrategy> {
    let at = r.offset();
    Ok(match r.u8()? {
        0 => PruneStrategy::Rng { alpha: r.f64()? },
        1 => PruneStrategy::TwoHop,
        2 => PruneStrategy::LabelCovered { alpha: r.f64()? },
        3 => PruneStrategy::KeepNearest,
        x => return Err(Error::format(at, format!("unknown pruning rule {x}"))),
    })
}

fn put_hnsw(w: &mut ByteWriter, h: &Hnsw) {
    let p = h.params();
    w.u64(h.len() as u64);
    w.u64(p.m as u64);
    w.u64(p.m_max0 as u64);
    w.u64(p.ef_construction as u64);
    put_prune(w, p.prune);
    w.u8(u8::from(p.flat));
    w.u64(p.seed);
    w.bytes(&h.levels);
    w.u32(h.entry);
    put_adjacency(w, &h.layer0);
    for (v, lists) in h.upper.iter().enumerate() {
        for list in lists {
            put_list(w, v as u32, list);
        }
    }
}

fn get_hnsw(r: &mut ByteReader, max_n: usize) -> Result<Hnsw> {
    let n = get_len(r, max_n)?;
    let params = HnswParams {
        m: r.u64()? as usize,
        m_max0: r.u64()? as usize,
        ef_construction: r.u64()? as usize,
        prune: get_prune(r)?,
        flat: r.u8()? != 0,
        seed: r.u64()?,
    };
    let levels = r.bytes(n)?.to_vec();
    let entry = get_id(r, n)?;
    let layer0 = get_adjacency(r, n, n)?;
    let mut upper = Vec::with_capacity(n);
    for (v, &lv) in levels.iter().enumerate() {
        upper.push((0..lv).map(|_| get_list(r, v as u32, n)).collect::<Result<Vec<_>>>()?);
    }
    Hnsw::from_parts(params, levels, layer0, upper, entry)
}

/// A `u64` node count no larger than `max`.
fn get_len(r: &mut ByteReader, max: usize) -> Result<usize> {
    let at = r.offset();
    let n = r.u64()?;
    if n > max as u64 {
        return Err(Error::format(at, format!("{n} nodes exceed the header's {max}")));
    }
    Ok(n as usize)
}

fn put_vamana_params(w: &mut ByteWriter, p: &VamanaParams) {
    w.u64(p.m as u64);
    w.u64(p.ef_construction as u64);
    w.f64(p.alpha);
    w.u64(p.seed);
}

fn get_vamana_params(r: &mut ByteReader) -> Result<VamanaParams> {
    Ok(VamanaParams {
        m: r.u64()? as usize,
        ef_construction: r.u64()? as usize,
        alpha: r.f64()?,
        seed: r.u64()?,
    })
}

fn put_ivf(w: &mut ByteWriter, i: &IvfIndex) {
    w.u64(i.seed());
    put_vectors(w, i.centroids());
    for list in i.lists() {
        w.uleb(list.len() as u64);
        let mut prev = 0i64;
        for &x in list {
            w.sleb(x as i64 - prev);
            prev = x as i64;
        }
    }
    match i.pq() {
        None => w.u8(0),
        Some(pq) => {
            w.u8(1);
            w.u64(pq.m as u64);
            w.u64(pq.ksub as u64);
            w.u64(pq.dsub as u64);
            for cb in &pq.codebooks {
                put_vectors(w, cb);
            }
            for &x in &pq.max_radius {
                w.f64(x);
            }
            w.u64(i.codes.len() as u64);
            w.bytes(&i.codes);
        }
    }
}

fn get_ivf(r: &mut ByteReader, n: usize, d: usize) -> Result<IvfIndex> {
    let seed = r.u64()?;
    let centroids = get_vectors(r)?;
    let mut lists = Vec::with_capacity(centroids.len());
    for _ in 0..centroids.len() {
        let len = get_count(r, n)?;
        let mut prev = 0i64;
        let mut list = Vec::with_capacity(len);
        for _ in 0..len {
            let at = r.offset();
            let x = prev + r.sleb()?;
            if x < 0 || x as usize >= n {
                return Err(Error::format(at, format!("id {x} out of range for {n} points")));
            }
            list.push(x as u32);
            prev = x;
        }
        lists.push(list);
    }
    let at = r.offset();
    let (pq, codes) = match r.u8()? {
        0 => (None, Vec::new()),
        1 => {
            let m = r.u64()? as usize;
            let ksub = r.u64()? as usize;
            let dsub = r.u64()? as usize;
            if m == 0 || m > d.max(1) {
                return Err(Error::format(at, format!("bad PQ subspace count {m}")));
            }
            let codebooks = (0..m).map(|_| get_vectors(r)).collect::<Result<Vec<_>>>()?;
            let max_radius = (0..m).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            let len = get_len(r, n.saturating_mul(m))?;
            let codes = r.bytes(len)?.to_vec();
            (Some(PqCodec::from_parts(m, ksub, dsub, codebooks, max_radius)?), codes)
        }
        x => return Err(Error::format(at, format!("bad PQ flag {x}"))),
    };
    IvfIndex::from_parts(centroids, lists, pq, codes, seed)
}

fn put_segmented_edge(w: &mut ByteWriter, g: &SegmentedEdgeGraph) {
    let p = g.params();
    w.u64(p.m as u64);
    w.u64(p.ef_construction as u64);
    w.u64(p.ep_count as u64);
    put_prune(w, p.prune);
    for v in 0..g.len() as u32 {
        let edges = g.edges(v);
        w.uleb(edges.len() as u64);
        for e in edges {
            w.uleb(e.target as u64);
            w.uleb(e.group as u64);
            w.uleb(e.l_lo as u64);
            w.uleb(e.l_hi as u64);
        }
    }
}

fn get_segmented_edge(r: &mut ByteReader, n: usize) -> Result<SegmentedEdgeGraph> {
    let params = SegmentedEdgeParams {
        m: r.u64()? as usize,
        ef_construction: r.u64()? as usize,
        ep_count: r.u64()? as usize,
        prune: get_prune(r)?,
        record_log: false,
    };
    let mut edges = Vec::with_capacity(n);
    for _ in 0..n {
        let len = get_count(r, r.remaining())?;
        let mut list = Vec::with_capacity(len);
        for _ in 0..len {
            let at = r.offset();
            let e = SegEdge {
                target: get_count(r, n)? as u32,
                group: get_count(r, n)? as u32,
                l_lo: get_count(r, n)? as u32,
                l_hi: get_count(r, n)? as u32,
            };
            if e.target as usize >= n || e.l_lo > e.l_hi {
                return Err(Error::format(at, "malformed segmented edge"));
            }
            list.push(e);
        }
        edges.push(list);
    }
    Ok(SegmentedEdgeGraph::from_parts(params, edges))
}

fn put_tree(w: &mut ByteWriter, t: &SegmentTree) {
    let p = t.params();
    w.u64(p.bucket as u64);
    w.u64(p.m as u64);
    w.u64(p.ef_construction as u64);
    w.u8(match p.mode {
        TreeMode::Merge => 0,
        TreeMode::Fused => 1,
    });
    w.u64(p.seed);
    w.u64(t.nodes().len() as u64);
    for node in t.nodes() {
        w.u32(node.lo);
        w.u32(node.hi);
        w.u32(node.left.unwrap_or(u32::MAX));
        w.u32(node.right.unwrap_or(u32::MAX));
        w.u32(node.medoid);
        put_adjacency(w, &node.graph.lists);
    }
}

fn get_tree(r: &mut ByteReader, n: usize) -> Result<SegmentTree> {
    let bucket = r.u64()? as usize;
    let m = r.u64()? as usize;
    let ef_construction = r.u64()? as usize;
    let at = r.offset();
    let mode = match r.u8()? {
        0 => TreeMode::Merge,
        1 => TreeMode::Fused,
        x => return Err(Error::format(at, format!("unknown tree mode {x}"))),
    };
    let seed = r.u64()?;
    let count = get_len(r, 2 * n)?;
    let child = |x: u32| (x != u32::MAX).then_some(x);
    let mut nodes = Vec::with_capacity(count);
    for _ in 0..count {
        let at = r.offset();
        let (lo, hi) = (r.u32()?, r.u32()?);
        let (left, right) = (child(r.u32()?), child(r.u32()?));
        let medoid = r.u32()?;
        if lo > hi || hi as usize >= n || medoid > hi - lo || left.is_some() != right.is_some() {
            return Err(Error::format(at, "malformed tree node"));
        }
        if [left, right].iter().flatten().any(|&c| c as usize >= count) {
            return Err(Error::format(at, "tree child out of range"));
        }
        let size = (hi - lo + 1) as usize;
        let graph = Adjacency { lists: get_adjacency(r, size, size)? };
        nodes.push(TreeNode { lo, hi, left, right, graph, medoid });
    }
    if nodes.is_empty() {
        return Err(Error::format(r.offset(), "tree without nodes"));
    }
    Ok(SegmentTree {
        params: SegmentTreeParams { bucket, m, ef_construction, mode, seed },
        nodes,
    })
}

fn put_segmented_hnsw(w: &mut ByteWriter, s: &SegmentedHnsw) {
    let p = s.params();
    w.u64(p.segments as u64);
    w.u64(p.m as u64);
    w.u64(p.ef_construction as u64);
    w.f64(p.sel_low);
    w.f64(p.sel_high);
    w.u64(p.seed);
    for &b in &s.bounds {
        w.u32(b);
    }
    for (v, list) in s.edges.iter().enumerate() {
        let targets: Vec<u32> = list.iter().map(|e| e.0).collect();
        put_list(w, v as u32, &targets);
        for e in list {
            w.bytes(&e.1.to_le_bytes());
        }
    }
    for h in &s.uppers {
        put_hnsw(w, h);
    }
}

fn get_segmented_hnsw(r: &mut ByteReader, n: usize) -> Result<SegmentedHnsw> {
    let at = r.offset();
    let segments = r.u64()? as usize;
    if segments == 0 || segments > crate::range::MAX_SEGMENTS || segments > n {
        return Err(Error::format(at, format!("bad segment count {segments}")));
    }
    let params = SegmentedHnswParams {
        segments,
        m: r.u64()? as usize,
        ef_construction: r.u64()? as usize,
        sel_low: r.f64()?,
        sel_high: r.f64()?,
        seed: r.u64()?,
    };
    let at = r.offset();
    let bounds = (0..=segments).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    if bounds[0] != 0 || bounds[segments] as usize != n || bounds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::format(at, "segment bounds do not tile the ranks"));
    }
    let mut edges = Vec::with_capacity(n);
    for v in 0..n as u32 {
        let targets = get_list(r, v, n)?;
        let masks = targets
            .iter()
            .map(|_| Ok(u128::from_le_bytes(r.bytes(16)?.try_into().expect("16 bytes"))))
            .collect::<Result<Vec<_>>>()?;
        edges.push(targets.into_iter().zip(masks).collect());
    }
    let ranges = segments * (segments + 1) / 2;
    let uppers = (0..ranges).map(|_| get_hnsw(r, n)).collect::<Result<Vec<_>>>()?;
    Ok(SegmentedHnsw { params, bounds, edges, uppers })
}

fn put_label_graph(w: &mut ByteWriter, g: &LabelGraph, p: &LabelGraphParams) {
    w.u64(p.m as u64);
    w.u64(p.ef_construction as u64);
    w.f64(p.alpha);
    w.u64(p.m_small as u64);
    w.u64(p.seed);
    put_adjacency(w, &g.adjacency.lists);
    w.u64(g.starts.len() as u64);
    for (&f, &s) in &g.starts {
        w.u32(f);
        w.u32(s);
    }
    for ls in &g.labels {
        w.uleb(ls.len() as u64);
        for &l in ls {
            w.u32(l);
        }
    }
}

fn get_label_graph(r: &mut ByteReader, n: usize) -> Result<(LabelGraph, LabelGraphParams)> {
    let params = LabelGraphParams {
        m: r.u64()? as usize,
        ef_construction: r.u64()? as usize,
        alpha: r.f64()?,
        m_small: r.u64()? as usize,
        seed: r.u64()?,
    };
    let adjacency = Adjacency { lists: get_adjacency(r, n, n)? };
    let count = get_len(r, r.remaining())?;
    let mut starts = BTreeMap::new();
    for _ in 0..count {
        let f = r.u32()?;
        starts.insert(f, get_id(r, n)?);
    }
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let len = get_count(r, r.remaining())?;
        labels.push((0..len).map(|_| r.u32()).collect::<Result<Vec<_>>>()?);
    }
    Ok((LabelGraph { adjacency, starts, labels }, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::IvfParams;
    use crate::filter::AcornParams;
    use crate::types::AttributedDataset;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dataset(n: usize) -> AttributedDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let v = Vectors::from_flat(8, (0..n * 8).map(|_| rng.random_range(-1.0f32..1.0)).collect()).unwrap();
        let attrs = (0..n).map(|_| rng.random_range(0..1000)).collect();
        let labels = (0..n).map(|_| vec![rng.random_range(0..4)]).collect();
        AttributedDataset::new(v, attrs, labels).unwrap()
    }

    fn round_trip(index: StoredIndex) {
        let bytes = to_bytes(&index, 8);
        let (h, back) = from_bytes(&bytes).unwrap();
        assert_eq!(h.kind, index.kind());
        assert_eq!(h.d, 8);
        assert_eq!(back, index);
        for cut in [0, 3, 10, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(from_bytes(&bytes[..cut]), Err(Error::Format { .. })), "cut at {cut}");
        }
    }

    #[test]
    fn every_kind_round_trips() {
        let ds = dataset(300);
        let v = ds.vectors();
        round_trip(StoredIndex::Hnsw(Hnsw::build(v, HnswParams::new(6, 24)).unwrap()));
        round_trip(StoredIndex::Vamana(Vamana::build(v, VamanaParams::new(6, 24)).unwrap()));
        round_trip(StoredIndex::Ivf(IvfIndex::build(v, &IvfParams::flat(8)).unwrap()));
        round_trip(StoredIndex::Ivf(IvfIndex::build(v, &IvfParams::with_pq(8, 4, 16)).unwrap()));
        round_trip(StoredIndex::Acorn(Acorn::build(v, &AcornParams::new(6, 24)).unwrap()));
        round_trip(StoredIndex::SegmentedEdge(SegmentedEdgeGraph::build(&ds, SegmentedEdgeParams::new(4, 16)).unwrap()));
        let mut tp = SegmentTreeParams::new(4, 16);
        tp.bucket = 16;
        round_trip(StoredIndex::SegmentTree(SegmentTree::build(&ds, tp).unwrap()));
        let mut sp = SegmentedHnswParams::new(4, 16);
        sp.segments = 3;
        round_trip(StoredIndex::SegmentedHnsw(SegmentedHnsw::build(&ds, sp).unwrap()));
        let lp = LabelGraphParams::new(6, 24);
        round_trip(StoredIndex::LabelGraph(LabelGraph::build_filtered(&ds, &lp).unwrap(), lp));
    }

    #[test]
    fn header_fields() {
        let ds = dataset(50);
        let h = Hnsw::build(ds.vectors(), HnswParams::new(5, 10)).unwrap();
        let bytes = to_bytes(&StoredIndex::Hnsw(h), 8);
        assert_eq!(&bytes[..4], b"FANN");
        let (hdr, _) = from_bytes(&bytes).unwrap();
        assert_eq!((hdr.version, hdr.kind, hdr.n, hdr.d, hdr.m), (FORMAT_VERSION, IndexKind::Hnsw, 50, 8, 5));
    }

    #[test]
    fn corrupt_neighbor_is_rejected_with_offset() {
        let mut w = ByteWriter::default();
        w.bytes(MAGIC);
        w.u32(FORMAT_VERSION);
        w.u8(IndexKind::Vamana as u8);
        w.u64(2);
        w.u32(1);
        w.u32(1);
        put_vamana_params(&mut w, &VamanaParams::new(1, 1));
        w.u32(0);
        put_list(&mut w, 0, &[1]);
        let bad_at = w.buf.len() as u64 + 1;
        put_list(&mut w, 1, &[7]);
        match from_bytes(&w.buf) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, bad_at),
            other => panic!("{other:?}"),
        }
    }
}
