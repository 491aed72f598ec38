//! Domain types shared by every index.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::distance::{PhaseTimes, Probe};
use crate::error::{Error, Result};
use crate::predicate::FilterPredicate;

pub type Id = u32;

/// Row-major dense `f32` matrix.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Vectors {
    dim: usize,
    data: Vec<f32>,
}

impl Vectors {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            data: Vec::new(),
        }
    }

    pub fn from_flat(dim: usize, data: Vec<f32>) -> Result<Self> {
        if dim == 0 && !data.is_empty() {
            return Err(Error::config("zero dimension with non-empty data"));
        }
        if dim > 0 && data.len() % dim != 0 {
            return Err(Error::Dimension {
                expected: dim,
                got: data.len() % dim,
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f32]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let mut v = Self::new(dim);
        for r in rows {
            v.push(r.as_ref())?;
        }
        Ok(v)
    }

    pub fn push(&mut self, row: &[f32]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_flat(&self) -> &[f32] {
        &self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    /// Copy of the rows at `order`, in that order.
    pub fn permuted(&self, order: &[Id]) -> Self {
        let mut data = Vec::with_capacity(order.len() * self.dim);
        for &i in order {
            data.extend_from_slice(self.get(i as usize));
        }
        Self {
            dim: self.dim,
            data,
        }
    }

    pub fn memory_bytes(&self) -> usize {
        self.data.len() * std::mem::size_of::<f32>()
    }
}

/// A single attributed vector, used to assemble datasets and for
/// point-level predicate evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub id: Id,
    pub vector: Vec<f32>,
    pub numeric_attr: i64,
    /// Sorted, deduplicated.
    pub labels: Vec<u32>,
}

impl DataPoint {
    pub fn new(id: Id, vector: Vec<f32>, numeric_attr: i64, mut labels: Vec<u32>) -> Self {
        labels.sort_unstable();
        labels.dedup();
        Self {
            id,
            vector,
            numeric_attr,
            labels,
        }
    }
}

/// Vectors with one numeric attribute and one label set per point.
///
/// Ids are dense positions `0..n`. `attr_rank[r]` is the id holding rank `r`
/// in ascending `(numeric_attr, id)` order.
#[derive(Clone, Debug)]
pub struct AttributedDataset {
    vectors: Vectors,
    attrs: Vec<i64>,
    labels: Vec<Vec<u32>>,
    attr_rank: Vec<Id>,
    rank_of: Vec<u32>,
    sorted_attrs: Vec<i64>,
}

impl AttributedDataset {
    pub fn new(vectors: Vectors, attrs: Vec<i64>, mut labels: Vec<Vec<u32>>) -> Result<Self> {
        let n = vectors.len();
        if attrs.len() != n || labels.len() != n {
            return Err(Error::config(format!(
                "column lengths differ: {} vectors, {} attrs, {} label sets",
                n,
                attrs.len(),
                labels.len()
            )));
        }
        if n > u32::MAX as usize {
            return Err(Error::config("dataset exceeds u32 id space"));
        }
        for l in labels.iter_mut() {
            l.sort_unstable();
            l.dedup();
        }
        let mut attr_rank: Vec<Id> = (0..n as Id).collect();
        attr_rank.sort_by_key(|&i| (attrs[i as usize], i));
        let mut rank_of = vec![0u32; n];
        for (r, &id) in attr_rank.iter().enumerate() {
            rank_of[id as usize] = r as u32;
        }
        let sorted_attrs = attr_rank.iter().map(|&i| attrs[i as usize]).collect();
        Ok(Self {
            vectors,
            attrs,
            labels,
            attr_rank,
            rank_of,
            sorted_attrs,
        })
    }

    /// Points must carry ids `0..n` in any order.
    pub fn from_points(points: Vec<DataPoint>, dim: usize) -> Result<Self> {
        let n = points.len();
        let mut slots: Vec<Option<DataPoint>> = vec![None; n];
        for p in points {
            let i = p.id as usize;
            if i >= n || slots[i].is_some() {
                return Err(Error::config(format!("ids must be unique in 0..{n}, got {}", p.id)));
            }
            slots[i] = Some(p);
        }
        let mut vectors = Vectors::new(dim);
        let mut attrs = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for p in slots.into_iter().flatten() {
            vectors.push(&p.vector)?;
            attrs.push(p.numeric_attr);
            labels.push(p.labels);
        }
        Self::new(vectors, attrs, labels)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.vectors.dim()
    }

    pub fn vectors(&self) -> &Vectors {
        &self.vectors
    }

    #[inline]
    pub fn vector(&self, id: Id) -> &[f32] {
        self.vectors.get(id as usize)
    }

    #[inline]
    pub fn attr(&self, id: Id) -> i64 {
        self.attrs[id as usize]
    }

    pub fn attrs(&self) -> &[i64] {
        &self.attrs
    }

    #[inline]
    pub fn labels(&self, id: Id) -> &[u32] {
        &self.labels[id as usize]
    }

    pub fn label_sets(&self) -> &[Vec<u32>] {
        &self.labels
    }

    pub fn point(&self, id: Id) -> DataPoint {
        DataPoint {
            id,
            vector: self.vector(id).to_vec(),
            numeric_attr: self.attr(id),
            labels: self.labels(id).to_vec(),
        }
    }

    pub fn attr_rank(&self) -> &[Id] {
        &self.attr_rank
    }

    #[inline]
    pub fn id_at_rank(&self, rank: usize) -> Id {
        self.attr_rank[rank]
    }

    #[inline]
    pub fn rank_of(&self, id: Id) -> usize {
        self.rank_of[id as usize] as usize
    }

    /// Attribute values in rank order (non-decreasing).
    pub fn sorted_attrs(&self) -> &[i64] {
        &self.sorted_attrs
    }

    /// Inclusive rank span of the points with `lo <= attr <= hi`.
    pub fn rank_range(&self, lo: i64, hi: i64) -> Option<(usize, usize)> {
        rank_range(&self.sorted_attrs, lo, hi)
    }

    /// Vectors reordered by attribute rank.
    pub fn rank_ordered_vectors(&self) -> Vectors {
        self.vectors.permuted(&self.attr_rank)
    }

    /// Distinct labels in ascending order.
    pub fn distinct_labels(&self) -> Vec<u32> {
        let mut all: Vec<u32> = self.labels.iter().flatten().copied().collect();
        all.sort_unstable();
        all.dedup();
        all
    }
}

/// Inclusive rank span of `[lo, hi]` over a non-decreasing attribute column.
/// Duplicate attribute values map to their maximal span.
pub fn rank_range(sorted_attrs: &[i64], lo: i64, hi: i64) -> Option<(usize, usize)> {
    if lo > hi {
        return None;
    }
    let first = sorted_attrs.partition_point(|&a| a < lo);
    let end = sorted_attrs.partition_point(|&a| a <= hi);
    if first >= end {
        None
    } else {
        Some((first, end - 1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilteredQuery {
    pub vector: Vec<f32>,
    pub predicate: FilterPredicate,
    pub k: usize,
}

impl FilteredQuery {
    pub fn new(vector: Vec<f32>, predicate: FilterPredicate, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::config("k must be at least 1"));
        }
        Ok(Self {
            vector,
            predicate,
            k,
        })
    }
}

/// A scored node. Orders by distance, then by id, so every sort and heap in
/// the crate breaks ties the same way.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub id: Id,
    pub distance: f64,
}

impl Neighbor {
    #[inline]
    pub fn new(id: Id, distance: f64) -> Self {
        Self { id, distance }
    }
}

impl Eq for Neighbor {}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Neighbor {
    #[inline]
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.id.cmp(&other.id))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SearchResult {
    pub ids: Vec<Id>,
    pub distances: Vec<f64>,
    pub comparisons: u64,
    pub phase_times: Option<PhaseTimes>,
    /// Set by indexes whose ranking is not restricted to predicate matches.
    pub approximate_predicate: bool,
    /// Fewer than `k` results although more matches exist.
    pub partial: bool,
}

impl SearchResult {
    /// Sorts `hits`, keeps the best `k` and takes counters from `probe`.
    pub fn from_hits(mut hits: Vec<Neighbor>, k: usize, probe: &Probe) -> Self {
        hits.sort_unstable();
        hits.truncate(k);
        Self {
            ids: hits.iter().map(|h| h.id).collect(),
            distances: hits.iter().map(|h| h.distance).collect(),
            comparisons: probe.comparisons(),
            phase_times: probe.phase_times().cloned(),
            approximate_predicate: false,
            partial: false,
        }
    }

    pub fn empty(probe: &Probe) -> Self {
        Self::from_hits(Vec::new(), 0, probe)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> AttributedDataset {
        let v = Vectors::from_rows(1, &[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        AttributedDataset::new(v, vec![30, 10, 30, 20], vec![vec![1], vec![], vec![2, 1, 2], vec![3]])
            .unwrap()
    }

    #[test]
    fn rank_order_breaks_ties_by_id() {
        let ds = tiny();
        assert_eq!(ds.attr_rank(), &[1, 3, 0, 2]);
        assert_eq!(ds.sorted_attrs(), &[10, 20, 30, 30]);
        assert_eq!(ds.rank_of(2), 3);
        assert_eq!(ds.labels(2), &[1, 2]);
    }

    #[test]
    fn rank_range_covers_duplicates() {
        let ds = tiny();
        assert_eq!(ds.rank_range(30, 30), Some((2, 3)));
        assert_eq!(ds.rank_range(11, 29), Some((1, 1)));
        assert_eq!(ds.rank_range(31, 100), None);
        assert_eq!(ds.rank_range(5, 4), None);
    }

    #[test]
    fn from_points_rejects_duplicate_ids() {
        let p = DataPoint::new(0, vec![0.0], 1, vec![]);
        assert!(AttributedDataset::from_points(vec![p.clone(), p], 1).is_err());
    }

    #[test]
    fn push_checks_dimension() {
        let mut v = Vectors::new(2);
        assert!(matches!(v.push(&[1.0]), Err(Error::Dimension { expected: 2, got: 1 })));
    }
}
