//! Attribute predicates.
//!
//! Text form, used by query files: `range:<lo>:<hi>`, `label:<f>`, and
//! conjunctions joined with `&`, e.g. `label:1&range:0:999`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{AttributedDataset, DataPoint};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterPredicate {
    /// `lo <= attr <= hi`.
    Range { lo: i64, hi: i64 },
    /// Label membership.
    Label(u32),
    /// All children hold. An empty conjunction is always true.
    And(Vec<FilterPredicate>),
}

impl FilterPredicate {
    pub fn range(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::config(format!("range bounds out of order: {lo} > {hi}")));
        }
        Ok(FilterPredicate::Range { lo, hi })
    }

    pub fn label(f: u32) -> Self {
        FilterPredicate::Label(f)
    }

    pub fn and(children: Vec<FilterPredicate>) -> Self {
        FilterPredicate::And(children)
    }

    /// Always true.
    pub fn any() -> Self {
        FilterPredicate::And(Vec::new())
    }

    /// `labels` must be sorted.
    #[inline]
    pub fn matches(&self, attr: i64, labels: &[u32]) -> bool {
        match self {
            FilterPredicate::Range { lo, hi } => *lo <= attr && attr <= *hi,
            FilterPredicate::Label(f) => labels.binary_search(f).is_ok(),
            FilterPredicate::And(cs) => cs.iter().all(|c| c.matches(attr, labels)),
        }
    }

    pub fn evaluate(&self, p: &DataPoint) -> bool {
        self.matches(p.numeric_attr, &p.labels)
    }

    #[inline]
    pub fn matches_id(&self, ds: &AttributedDataset, id: u32) -> bool {
        self.matches(ds.attr(id), ds.labels(id))
    }

    /// Numeric bounds implied by the predicate; `None` when contradictory.
    /// Unconstrained sides are `i64::MIN` / `i64::MAX`.
    pub fn attr_bounds(&self) -> Option<(i64, i64)> {
        match self {
            FilterPredicate::Range { lo, hi } => Some((*lo, *hi)),
            FilterPredicate::Label(_) => Some((i64::MIN, i64::MAX)),
            FilterPredicate::And(cs) => {
                let mut lo = i64::MIN;
                let mut hi = i64::MAX;
                for c in cs {
                    let (l, h) = c.attr_bounds()?;
                    lo = lo.max(l);
                    hi = hi.min(h);
                }
                (lo <= hi).then_some((lo, hi))
            }
        }
    }

    /// Labels every match must carry.
    pub fn required_labels(&self) -> Vec<u32> {
        let mut out = Vec::new();
        self.collect_labels(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_labels(&self, out: &mut Vec<u32>) {
        match self {
            FilterPredicate::Range { .. } => {}
            FilterPredicate::Label(f) => out.push(*f),
            FilterPredicate::And(cs) => cs.iter().for_each(|c| c.collect_labels(out)),
        }
    }

    /// The bare range, if this predicate is exactly one range atom.
    pub fn as_range(&self) -> Option<(i64, i64)> {
        match self {
            FilterPredicate::Range { lo, hi } => Some((*lo, *hi)),
            FilterPredicate::And(cs) if cs.len() == 1 => cs[0].as_range(),
            _ => None,
        }
    }

    /// The bare label, if this predicate is exactly one label atom.
    pub fn as_label(&self) -> Option<u32> {
        match self {
            FilterPredicate::Label(f) => Some(*f),
            FilterPredicate::And(cs) if cs.len() == 1 => cs[0].as_label(),
            _ => None,
        }
    }
}

/// Fraction of points passing `pred`, by full scan.
pub fn exact_selectivity(pred: &FilterPredicate, ds: &AttributedDataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let matched = (0..ds.len() as u32).filter(|&i| pred.matches_id(ds, i)).count();
    Ok(matched as f64 / ds.len() as f64)
}

impl fmt::Display for FilterPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FilterPredicate::Range { lo, hi } => write!(f, "range:{lo}:{hi}"),
            FilterPredicate::Label(l) => write!(f, "label:{l}"),
            FilterPredicate::And(cs) if cs.is_empty() => write!(f, "any"),
            FilterPredicate::And(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "&")?;
                    }
                    write!(f, "{c}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for FilterPredicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "any" {
            return Ok(FilterPredicate::any());
        }
        let atoms: Vec<&str> = s.split('&').map(str::trim).collect();
        if atoms.len() > 1 {
            let children = atoms.into_iter().map(parse_atom).collect::<Result<_>>()?;
            return Ok(FilterPredicate::And(children));
        }
        parse_atom(s)
    }
}

fn parse_atom(s: &str) -> Result<FilterPredicate> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Parse(format!("bad predicate atom `{s}`"));
    match parts.as_slice() {
        ["range", lo, hi] => {
            let lo = lo.parse().map_err(|_| bad())?;
            let hi = hi.parse().map_err(|_| bad())?;
            FilterPredicate::range(lo, hi)
        }
        ["label", f] => Ok(FilterPredicate::Label(f.parse().map_err(|_| bad())?)),
        _ => Err(bad()),
    }
}
