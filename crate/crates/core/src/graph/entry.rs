use crate::error::{Error, Result};
use crate::types::{AttributedDataset, Id};

/// Ranks `l + floor(j * (u - l) / (count - 1))` for `j in 0..count`,
/// deduplicated; a single entry sits at the midpoint.
pub fn even_ranks(l: usize, u: usize, count: usize) -> Result<Vec<usize>> {
    if l > u || count == 0 {
        return Err(Error::NoEntry);
    }
    if count == 1 {
        return Ok(vec![l + (u - l) / 2]);
    }
    let span = u - l;
    let mut out: Vec<usize> = (0..count).map(|j| l + j * span / (count - 1)).collect();
    out.dedup();
    Ok(out)
}

/// Ids at evenly spaced attribute ranks within `[l, u]`.
pub fn select_entry_points_even(ds: &AttributedDataset, l: usize, u: usize, count: usize) -> Result<Vec<Id>> {
    if u >= ds.len() {
        return Err(Error::NoEntry);
    }
    Ok(even_ranks(l, u, count)?.into_iter().map(|r| ds.id_at_rank(r)).collect())
}
