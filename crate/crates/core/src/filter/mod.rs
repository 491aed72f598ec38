//! Arbitrary predicates: membership bitmaps, the pre/post/joint filtering
//! strategies, the two-hop expanding graph and the attribute-partitioned
//! index.

mod acorn;
mod bitmap;
mod partitioned;
mod strategies;

pub use acorn::{Acorn, AcornParams, AcornView};
pub use bitmap::MembershipBitmap;
pub use partitioned::{Partition, PartitionParams, PartitionedIndex, SubIndexKind};
pub use strategies::{joint_filter_search, oversampled_k, post_filter_search, pre_filter_scan, GraphSearch};

pub(crate) use strategies::check_dim;
