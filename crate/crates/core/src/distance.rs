//! Euclidean distance and per-query instrumentation.
//!
//! Every search threads a [`Probe`] through its hot loop. The probe counts
//! distance evaluations and, when profiling is enabled, attributes wall time
//! to the phases reported by [`PhaseTimes`].

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Checked Euclidean distance.
pub fn l2_distance(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(l2(a, b))
}

#[inline]
pub fn l2(a: &[f32], b: &[f32]) -> f64 {
    l2_squared(a, b).sqrt()
}

#[inline]
pub fn l2_squared(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four independent accumulators let the compiler vectorize.
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let (ra, rb) = (chunks_a.remainder(), chunks_b.remainder());
    for (x, y) in chunks_a.zip(chunks_b) {
        for j in 0..4 {
            let d = f64::from(x[j]) - f64::from(y[j]);
            acc[j] += d * d;
        }
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        let d = f64::from(*x) - f64::from(*y);
        sum += d * d;
    }
    sum
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    DistanceCompute,
    EdgeFiltering,
    HeapMaintenance,
    Other,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub distance_compute: Duration,
    pub edge_filtering: Duration,
    pub heap_maintenance: Duration,
    pub other: Duration,
}

impl PhaseTimes {
    pub fn get(&self, phase: Phase) -> Duration {
        match phase {
            Phase::DistanceCompute => self.distance_compute,
            Phase::EdgeFiltering => self.edge_filtering,
            Phase::HeapMaintenance => self.heap_maintenance,
            Phase::Other => self.other,
        }
    }

    fn slot(&mut self, phase: Phase) -> &mut Duration {
        match phase {
            Phase::DistanceCompute => &mut self.distance_compute,
            Phase::EdgeFiltering => &mut self.edge_filtering,
            Phase::HeapMaintenance => &mut self.heap_maintenance,
            Phase::Other => &mut self.other,
        }
    }

    pub fn total(&self) -> Duration {
        self.distance_compute + self.edge_filtering + self.heap_maintenance + self.other
    }

    pub fn add(&mut self, other: &PhaseTimes) {
        self.distance_compute += other.distance_compute;
        self.edge_filtering += other.edge_filtering;
        self.heap_maintenance += other.heap_maintenance;
        self.other += other.other;
    }
}

/// Per-query counters. Not shared across threads; callers merge.
#[derive(Clone, Debug, Default)]
pub struct Probe {
    comparisons: u64,
    timing: Option<PhaseTimes>,
    trace: Option<Vec<u32>>,
}

impl Probe {
    pub fn new() -> Self {
        Self::default()
    }

    /// A probe that also records time per phase.
    pub fn profiled() -> Self {
        Self {
            timing: Some(PhaseTimes::default()),
            ..Self::default()
        }
    }

    /// A probe that records the node id of every distance evaluation.
    pub fn traced() -> Self {
        Self {
            trace: Some(Vec::new()),
            ..Self::default()
        }
    }

    #[inline]
    pub fn comparisons(&self) -> u64 {
        self.comparisons
    }

    pub fn phase_times(&self) -> Option<&PhaseTimes> {
        self.timing.as_ref()
    }

    pub fn phase_times_mut(&mut self) -> Option<&mut PhaseTimes> {
        self.timing.as_mut()
    }

    pub fn trace(&self) -> Option<&[u32]> {
        self.trace.as_deref()
    }

    pub fn is_profiled(&self) -> bool {
        self.timing.is_some()
    }

    /// Counted, checked distance between two raw vectors.
    pub fn l2_distance(&mut self, a: &[f32], b: &[f32]) -> Result<f64> {
        let d = l2_distance(a, b)?;
        self.comparisons += 1;
        Ok(d)
    }

    /// Evaluates one distance to `node`, counting it.
    #[inline]
    pub fn distance<F: FnOnce() -> f64>(&mut self, node: u32, f: F) -> f64 {
        self.comparisons += 1;
        if let Some(t) = self.trace.as_mut() {
            t.push(node);
        }
        self.phase(Phase::DistanceCompute, f)
    }

    #[inline]
    pub fn phase<T, F: FnOnce() -> T>(&mut self, phase: Phase, f: F) -> T {
        match self.timing.as_mut() {
            None => f(),
            Some(_) => {
                let start = Instant::now();
                let out = f();
                let spent = start.elapsed();
                if let Some(t) = self.timing.as_mut() {
                    *t.slot(phase) += spent;
                }
                out
            }
        }
    }

    /// Folds another probe's counters into this one.
    pub fn absorb(&mut self, other: &Probe) {
        self.comparisons += other.comparisons;
        if let (Some(mine), Some(theirs)) = (self.timing.as_mut(), other.timing.as_ref()) {
            mine.add(theirs);
        }
        if let (Some(mine), Some(theirs)) = (self.trace.as_mut(), other.trace.as_ref()) {
            mine.extend_from_slice(theirs);
        }
    }
}
