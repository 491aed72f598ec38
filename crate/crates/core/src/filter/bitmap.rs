use crate::predicate::FilterPredicate;
use crate::types::AttributedDataset;

/// One bit per id; `count` caches the popcount.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MembershipBitmap {
    words: Vec<u64>,
    n: usize,
    count: usize,
}

impl MembershipBitmap {
    /// Full scan of `pred` over `ds`.
    pub fn compile(pred: &FilterPredicate, ds: &AttributedDataset) -> Self {
        Self::from_fn(ds.len(), |id| pred.matches_id(ds, id))
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(u32) -> bool) -> Self {
        let mut words = vec![0u64; n.div_ceil(64)];
        let mut count = 0;
        for id in 0..n {
            if f(id as u32) {
                words[id / 64] |= 1 << (id % 64);
                count += 1;
            }
        }
        Self { words, n, count }
    }

    pub fn full(n: usize) -> Self {
        Self::from_fn(n, |_| true)
    }

    #[inline]
    pub fn contains(&self, id: u32) -> bool {
        let i = id as usize;
        i < self.n && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// `count / n`; zero for an empty universe.
    pub fn selectivity(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.count as f64 / self.n as f64
        }
    }

    /// Member ids in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let t = bits.trailing_zeros();
                    bits &= bits - 1;
                    Some((w * 64) as u32 + t)
                }
            })
        })
    }

    pub fn memory_bytes(&self) -> usize {
        self.words.len() * 8
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicate::exact_selectivity;
    use crate::types::Vectors;
    use proptest::prelude::*;

    fn five() -> AttributedDataset {
        let v = Vectors::from_rows(1, &[[0.0], [1.0], [2.0], [3.0], [4.0]]).unwrap();
        AttributedDataset::new(v, vec![10, 20, 30, 40, 50], vec![vec![1], vec![2], vec![1], vec![1, 2], vec![]]).unwrap()
    }

    #[test]
    fn range_over_five_points() {
        let b = MembershipBitmap::compile(&FilterPredicate::range(25, 55).unwrap(), &five());
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![2, 3, 4]);
        assert_eq!(b.count(), 3);
    }

    #[test]
    fn always_true_sets_every_bit() {
        let b = MembershipBitmap::compile(&FilterPredicate::any(), &five());
        assert_eq!(b.count(), 5);
        assert!((0..5).all(|i| b.contains(i)));
        assert!(!b.contains(5));
    }

    #[test]
    fn conjunction_is_bounded_by_its_children() {
        let ds = five();
        let r = FilterPredicate::range(15, 45).unwrap();
        let l = FilterPredicate::label(1);
        let both = FilterPredicate::and(vec![r.clone(), l.clone()]);
        let c = MembershipBitmap::compile(&both, &ds).count();
        assert!(c <= MembershipBitmap::compile(&r, &ds).count());
        assert!(c <= MembershipBitmap::compile(&l, &ds).count());
        assert_eq!(c, 2);
    }

    proptest! {
        #[test]
        fn count_agrees_with_selectivity(
            attrs in prop::collection::vec(0i64..100, 1..200),
            lo in 0i64..100,
            w in 0i64..100,
            label in 0u32..4,
        ) {
            let n = attrs.len();
            let v = Vectors::from_flat(1, vec![0.0; n]).unwrap();
            let labels: Vec<Vec<u32>> = (0..n).map(|i| vec![(i % 4) as u32]).collect();
            let ds = AttributedDataset::new(v, attrs, labels).unwrap();
            let pred = FilterPredicate::and(vec![FilterPredicate::range(lo, lo + w).unwrap(), FilterPredicate::label(label)]);
            let b = MembershipBitmap::compile(&pred, &ds);
            let sel = exact_selectivity(&pred, &ds).unwrap();
            prop_assert_eq!((sel * n as f64).round() as usize, b.count());
            prop_assert_eq!(b.iter().count(), b.count());
        }
    }
}
