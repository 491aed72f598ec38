//! Label filtering: label-aware Vamana graphs built incrementally or
//! stitched from per-label subgraphs, and the joint vector/label metric
//! index.

mod joint;
mod vamana;

pub use joint::{joint_distance, JointIndex, JointParams, JointSpace, JointVariant};
pub use vamana::{LabelGraph, LabelGraphParams};

/// Whether two sorted label sets intersect.
pub(crate) fn shares_label(a: &[u32], b: &[u32]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Size of the intersection of two sorted label sets.
pub(crate) fn common_labels(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn merge_scans_agree_with_sets(
            a in proptest::collection::btree_set(0u32..40, 0..12),
            b in proptest::collection::btree_set(0u32..40, 0..12),
        ) {
            let (va, vb): (Vec<u32>, Vec<u32>) = (a.iter().copied().collect(), b.iter().copied().collect());
            let both = a.intersection(&b).count();
            prop_assert_eq!(common_labels(&va, &vb), both);
            prop_assert_eq!(shares_label(&va, &vb), both > 0);
        }
    }
}
