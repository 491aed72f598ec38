//! Neighbor pruning rules.
//!
//! Every rule scans candidates in ascending `(distance, id)` order and
//! returns the kept prefix-selection, at most `m` entries. The owner itself
//! and repeated ids are skipped.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::types::Neighbor;

/// What a pruning rule may ask about the graph under construction.
pub trait PruneContext {
    fn distance(&self, a: u32, b: u32) -> f64;

    /// Whether `c` is currently an out-neighbor of `u`.
    fn is_neighbor(&self, _u: u32, _c: u32) -> bool {
        false
    }

    /// Sorted label set of `id`.
    fn labels(&self, _id: u32) -> &[u32] {
        &[]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PruneStrategy {
    /// Drop `c` if a kept `u` has `alpha * d(u, c) < d(owner, c)`.
    Rng { alpha: f64 },
    /// Drop `c` if it is already an out-neighbor of a kept node.
    TwoHop,
    /// The RNG rule, applied only when the blocker's labels cover both
    /// endpoints' labels.
    LabelCovered { alpha: f64 },
    /// The `m` nearest, unconditionally.
    KeepNearest,
}

impl PruneStrategy {
    pub const RNG: PruneStrategy = PruneStrategy::Rng { alpha: 1.0 };
    pub const LABEL_COVERED: PruneStrategy = PruneStrategy::LabelCovered { alpha: 1.0 };

    /// `cands` must be sorted ascending.
    pub fn apply<C: PruneContext + ?Sized>(&self, owner: u32, cands: &[Neighbor], m: usize, ctx: &C) -> Vec<Neighbor> {
        match *self {
            PruneStrategy::Rng { alpha } => prune_alpha(owner, cands, m, alpha, |a, b| ctx.distance(a, b)),
            PruneStrategy::TwoHop => prune_two_hop(owner, cands, m, |u, c| ctx.is_neighbor(u, c)),
            PruneStrategy::LabelCovered { alpha } => {
                prune_label_covered(owner, cands, m, alpha, |a, b| ctx.distance(a, b), |i| ctx.labels(i))
            }
            PruneStrategy::KeepNearest => prune_keep_nearest(owner, cands, m),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PruneStrategy::Rng { .. } => "rng",
            PruneStrategy::TwoHop => "two-hop",
            PruneStrategy::LabelCovered { .. } => "label-covered",
            PruneStrategy::KeepNearest => "keep-nearest",
        }
    }
}

impl fmt::Display for PruneStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PruneStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rng" => Ok(PruneStrategy::RNG),
            "two-hop" => Ok(PruneStrategy::TwoHop),
            "label-covered" => Ok(PruneStrategy::LABEL_COVERED),
            "keep-nearest" => Ok(PruneStrategy::KeepNearest),
            _ => Err(Error::Parse(format!("unknown prune strategy `{s}`"))),
        }
    }
}

/// Iterates candidates that are neither the owner nor already kept.
fn scan<'a>(owner: u32, cands: &'a [Neighbor]) -> impl Iterator<Item = Neighbor> + 'a {
    let mut prev: Option<u32> = None;
    cands.iter().copied().filter(move |c| {
        let dup = prev == Some(c.id);
        prev = Some(c.id);
        c.id != owner && !dup
    })
}

fn push_unique(kept: &mut Vec<Neighbor>, c: Neighbor) -> bool {
    if kept.iter().any(|k| k.id == c.id) {
        false
    } else {
        kept.push(c);
        true
    }
}

/// Keeps `c` iff every kept `u` has `d(u, c) >= d(owner, c)`.
pub fn prune_rng(owner: u32, cands: &[Neighbor], m: usize, dist: impl FnMut(u32, u32) -> f64) -> Vec<Neighbor> {
    prune_alpha(owner, cands, m, 1.0, dist)
}

/// Keeps `c` iff every kept `u` has `alpha * d(u, c) >= d(owner, c)`.
pub fn prune_alpha(
    owner: u32,
    cands: &[Neighbor],
    m: usize,
    alpha: f64,
    mut dist: impl FnMut(u32, u32) -> f64,
) -> Vec<Neighbor> {
    let mut kept: Vec<Neighbor> = Vec::with_capacity(m);
    for c in scan(owner, cands) {
        if kept.len() >= m {
            break;
        }
        let blocked = kept.iter().any(|u| alpha * dist(u.id, c.id) < c.distance);
        if !blocked {
            push_unique(&mut kept, c);
        }
    }
    kept
}

/// Keeps `c` iff no kept `u` already links to `c`.
pub fn prune_two_hop(
    owner: u32,
    cands: &[Neighbor],
    m: usize,
    mut is_neighbor: impl FnMut(u32, u32) -> bool,
) -> Vec<Neighbor> {
    let mut kept: Vec<Neighbor> = Vec::with_capacity(m);
    for c in scan(owner, cands) {
        if kept.len() >= m {
            break;
        }
        if !kept.iter().any(|u| is_neighbor(u.id, c.id)) {
            push_unique(&mut kept, c);
        }
    }
    kept
}

fn covers(big: &[u32], small: &[u32]) -> bool {
    small.iter().all(|l| big.binary_search(l).is_ok())
}

/// Drops `c` only if some kept `u` blocks it under the alpha rule and
/// `labels(u) ⊇ labels(owner) ∪ labels(c)`.
pub fn prune_label_covered<'l>(
    owner: u32,
    cands: &[Neighbor],
    m: usize,
    alpha: f64,
    mut dist: impl FnMut(u32, u32) -> f64,
    labels: impl Fn(u32) -> &'l [u32],
) -> Vec<Neighbor> {
    let owner_labels = labels(owner);
    let mut kept: Vec<Neighbor> = Vec::with_capacity(m);
    for c in scan(owner, cands) {
        if kept.len() >= m {
            break;
        }
        let c_labels = labels(c.id);
        let blocked = kept.iter().any(|u| {
            alpha * dist(u.id, c.id) < c.distance && {
                let u_labels = labels(u.id);
                covers(u_labels, owner_labels) && covers(u_labels, c_labels)
            }
        });
        if !blocked {
            push_unique(&mut kept, c);
        }
    }
    kept
}

/// The first `m` candidates.
pub fn prune_keep_nearest(owner: u32, cands: &[Neighbor], m: usize) -> Vec<Neighbor> {
    let mut kept = Vec::with_capacity(m.min(cands.len()));
    for c in scan(owner, cands) {
        if kept.len() >= m {
            break;
        }
        push_unique(&mut kept, c);
    }
    kept
}
