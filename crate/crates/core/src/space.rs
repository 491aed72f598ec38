//! Metric spaces over node indices.
//!
//! Graph construction only ever asks for `distance(a, b)` between two local
//! node indices, so the same builders serve plain vectors, attribute-sorted
//! subsets and the joint vector/label metric.

use std::borrow::Cow;

use crate::distance::l2;
use crate::types::Vectors;

pub trait Space: Sync {
    fn len(&self) -> usize;

    fn distance(&self, a: u32, b: u32) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A space whose nodes are stored vectors.
pub trait VectorSpace: Space {
    fn dim(&self) -> usize;

    fn vector(&self, i: u32) -> &[f32];

    #[inline]
    fn query_distance(&self, q: &[f32], i: u32) -> f64 {
        l2(q, self.vector(i))
    }
}

impl Space for Vectors {
    #[inline]
    fn len(&self) -> usize {
        Vectors::len(self)
    }

    #[inline]
    fn distance(&self, a: u32, b: u32) -> f64 {
        l2(self.get(a as usize), self.get(b as usize))
    }
}

impl VectorSpace for Vectors {
    fn dim(&self) -> usize {
        Vectors::dim(self)
    }

    #[inline]
    fn vector(&self, i: u32) -> &[f32] {
        self.get(i as usize)
    }
}

/// Local index `i` is the row `ids[i]` of the backing matrix.
#[derive(Clone, Debug)]
pub struct Subset<'a> {
    vectors: &'a Vectors,
    ids: Cow<'a, [u32]>,
}

impl<'a> Subset<'a> {
    pub fn new(vectors: &'a Vectors, ids: impl Into<Cow<'a, [u32]>>) -> Self {
        Self {
            vectors,
            ids: ids.into(),
        }
    }

    /// Rows `start..start + len`.
    pub fn span(vectors: &'a Vectors, start: usize, len: usize) -> Self {
        Self::new(vectors, (start as u32..(start + len) as u32).collect::<Vec<_>>())
    }

    #[inline]
    pub fn global(&self, local: u32) -> u32 {
        self.ids[local as usize]
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }
}

impl Space for Subset<'_> {
    #[inline]
    fn len(&self) -> usize {
        self.ids.len()
    }

    #[inline]
    fn distance(&self, a: u32, b: u32) -> f64 {
        l2(self.vector(a), self.vector(b))
    }
}

impl VectorSpace for Subset<'_> {
    fn dim(&self) -> usize {
        self.vectors.dim()
    }

    #[inline]
    fn vector(&self, i: u32) -> &[f32] {
        self.vectors.get(self.ids[i as usize] as usize)
    }
}
