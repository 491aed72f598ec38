use std::collections::BTreeMap;
use std::time::Instant;

use super::methods::BuiltIndex;
use crate::distance::Probe;
use crate::error::Result;
use crate::eval::{recall_at_k, GroundTruth};
use crate::types::{AttributedDataset, FilteredQuery};

pub const DEFAULT_EF_CAP: usize = 4096;
/// Recall may dip this much when the knob doubles before it counts as a
/// monotonicity violation.
pub const MONOTONE_TOLERANCE: f64 = 0.01;

/// Workload-level result of one knob setting.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Measurement {
    /// Mean over queries with non-empty truth.
    pub recall: f64,
    /// Single-threaded queries per second over the whole workload.
    pub qps: f64,
    pub mean_comparisons: f64,
    /// Returned ids failing their query's predicate.
    pub violations: u64,
}

/// Runs every query once on the calling thread.
pub fn measure(index: &BuiltIndex, ds: &AttributedDataset, queries: &[FilteredQuery], truth: &GroundTruth, knob: usize) -> Result<Measurement> {
    let mut results = Vec::with_capacity(queries.len());
    let mut comparisons = 0u64;
    let start = Instant::now();
    for q in queries {
        let mut probe = Probe::new();
        let r = index.search(ds, q, knob, &mut probe)?;
        comparisons += r.comparisons;
        results.push(r.ids);
    }
    let secs = start.elapsed().as_secs_f64();
    let mut violations = 0;
    let (mut sum, mut counted) = (0.0, 0usize);
    for ((ids, q), t) in results.iter().zip(queries).zip(&truth.entries) {
        violations += ids.iter().filter(|&&i| !q.predicate.matches_id(ds, i)).count() as u64;
        if let Ok(r) = recall_at_k(ids, t) {
            sum += r;
            counted += 1;
        }
    }
    let nq = queries.len().max(1) as f64;
    Ok(Measurement {
        recall: if counted == 0 { 1.0 } else { sum / counted as f64 },
        qps: if secs > 0.0 { queries.len() as f64 / secs } else { f64::INFINITY },
        mean_comparisons: comparisons as f64 / nq,
        violations,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tuned {
    /// Smallest knob meeting the target, or the cap on failure.
    pub ef: usize,
    pub measurement: Measurement,
    /// Target unreachable within the cap.
    pub failed: bool,
    /// Knob settings whose recall fell below that at half the knob by more
    /// than [`MONOTONE_TOLERANCE`].
    pub monotonicity_violations: Vec<usize>,
    /// Every `(knob, recall)` evaluated, ascending by knob.
    pub trace: Vec<(usize, f64)>,
}

/// Exponential search from `lo` until the target is met or `hi` is reached,
/// then bisection down to the smallest passing knob.
pub fn tune_knob<F>(lo: usize, hi: usize, target: f64, mut eval: F) -> Result<Tuned>
where
    F: FnMut(usize) -> Result<Measurement>,
{
    let lo = lo.max(1);
    let hi = hi.max(lo);
    let mut seen: BTreeMap<usize, Measurement> = BTreeMap::new();
    let mut bad = Vec::new();
    let mut at = |ef: usize, seen: &mut BTreeMap<usize, Measurement>| -> Result<f64> {
        if let Some(m) = seen.get(&ef) {
            return Ok(m.recall);
        }
        let m = eval(ef)?;
        if let Some(half) = seen.get(&(ef / 2)) {
            if m.recall + MONOTONE_TOLERANCE < half.recall {
                bad.push(ef);
            }
        }
        let r = m.recall;
        seen.insert(ef, m);
        Ok(r)
    };

    let mut pass = None;
    let mut fail = None;
    let mut ef = lo;
    loop {
        if at(ef, &mut seen)? >= target {
            pass = Some(ef);
            break;
        }
        fail = Some(ef);
        if ef == hi {
            break;
        }
        ef = (ef * 2).min(hi);
    }
    let Some(mut pass) = pass else {
        return Ok(finish(hi, true, seen, bad));
    };
    if let Some(mut fail) = fail {
        while pass - fail > 1 {
            let mid = fail + (pass - fail) / 2;
            if at(mid, &mut seen)? >= target {
                pass = mid;
            } else {
                fail = mid;
            }
        }
    }
    if pass / 2 >= lo {
        at(pass / 2, &mut seen)?;
        let half = seen[&(pass / 2)].recall;
        if seen[&pass].recall + MONOTONE_TOLERANCE < half && !bad.contains(&pass) {
            bad.push(pass);
        }
    }
    Ok(finish(pass, false, seen, bad))
}

fn finish(ef: usize, failed: bool, seen: BTreeMap<usize, Measurement>, mut bad: Vec<usize>) -> Tuned {
    bad.sort_unstable();
    Tuned {
        ef,
        measurement: seen[&ef].clone(),
        failed,
        monotonicity_violations: bad,
        trace: seen.iter().map(|(&e, m)| (e, m.recall)).collect(),
    }
}

/// Tunes the search knob over `[k, ef_cap]` (probe counts start at 1).
pub fn tune_ef_for_recall(
    index: &BuiltIndex,
    ds: &AttributedDataset,
    queries: &[FilteredQuery],
    truth: &GroundTruth,
    target: f64,
    ef_cap: usize,
) -> Result<Tuned> {
    let lo = match index {
        BuiltIndex::Ivf(_) => 1,
        BuiltIndex::Partitioned(_) => 1,
        _ => truth.k,
    };
    let hi = match index {
        BuiltIndex::PreFilter => lo,
        BuiltIndex::Ivf(i) => ef_cap.min(i.nlist()),
        _ => ef_cap,
    };
    tune_knob(lo, hi, target, |ef| measure(index, ds, queries, truth, ef))
}
