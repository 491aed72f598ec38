use std::time::Instant;

use crate::distance::Probe;
use crate::error::Result;
use crate::types::SearchResult;

/// Runs `search` with a profiling probe. Time not attributed to distance,
/// edge filtering or heap work is booked as `other`, so the phases sum to
/// the measured wall time.
pub fn timed_search<F>(search: F) -> Result<SearchResult>
where
    F: FnOnce(&mut Probe) -> Result<SearchResult>,
{
    let mut probe = Probe::profiled();
    let start = Instant::now();
    let mut res = search(&mut probe)?;
    let wall = start.elapsed();
    let mut times = probe.phase_times().cloned().unwrap_or_default();
    times.other = wall.saturating_sub(times.distance_compute + times.edge_filtering + times.heap_maintenance);
    res.phase_times = Some(times);
    res.comparisons = probe.comparisons();
    Ok(res)
}
