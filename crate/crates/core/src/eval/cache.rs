use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{ground_truth, GroundTruth, TruthEntry};
use crate::codec::ByteReader;
use crate::error::{Error, Result};
use crate::types::{AttributedDataset, FilteredQuery};

const MAGIC: &[u8; 4] = b"FGTC";
const VERSION: u32 = 1;

/// Identifies the inputs a cached truth was computed from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TruthKey {
    pub dataset: [u8; 32],
    pub workload: [u8; 32],
    pub k: u32,
}

impl TruthKey {
    pub fn new(ds: &AttributedDataset, queries: &[FilteredQuery], k: usize) -> Self {
        Self {
            dataset: dataset_hash(ds),
            workload: workload_hash(queries),
            k: k as u32,
        }
    }

    fn file_name(&self) -> String {
        let hex = |b: &[u8]| b.iter().take(8).map(|x| format!("{x:02x}")).collect::<String>();
        format!("{}-{}-k{}.gt", hex(&self.dataset), hex(&self.workload), self.k)
    }
}

pub fn dataset_hash(ds: &AttributedDataset) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((ds.len() as u64).to_le_bytes());
    h.update((ds.dim() as u64).to_le_bytes());
    for x in ds.vectors().as_flat() {
        h.update(x.to_le_bytes());
    }
    for a in ds.attrs() {
        h.update(a.to_le_bytes());
    }
    for ls in ds.label_sets() {
        h.update((ls.len() as u32).to_le_bytes());
        for l in ls {
            h.update(l.to_le_bytes());
        }
    }
    h.finalize().into()
}

pub fn workload_hash(queries: &[FilteredQuery]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((queries.len() as u64).to_le_bytes());
    for q in queries {
        h.update((q.vector.len() as u64).to_le_bytes());
        for x in &q.vector {
            h.update(x.to_le_bytes());
        }
        let pred = q.predicate.to_string();
        h.update((pred.len() as u64).to_le_bytes());
        h.update(pred.as_bytes());
        h.update((q.k as u64).to_le_bytes());
    }
    h.finalize().into()
}

pub fn save_truth(path: &Path, key: &TruthKey, truth: &GroundTruth) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&key.dataset);
    buf.extend_from_slice(&key.workload);
    buf.extend_from_slice(&key.k.to_le_bytes());
    buf.extend_from_slice(&(truth.entries.len() as u32).to_le_bytes());
    for e in &truth.entries {
        buf.extend_from_slice(&(e.ids.len() as u32).to_le_bytes());
        buf.push(u8::from(e.short));
        for id in &e.ids {
            buf.extend_from_slice(&id.to_le_bytes());
        }
        for d in &e.distances {
            buf.extend_from_slice(&d.to_le_bytes());
        }
    }
    std::fs::write(path, buf)?;
    Ok(())
}

/// The cached truth at `path`, or `None` if the file is missing or was
/// computed from other inputs.
pub fn load_truth(path: &Path, key: &TruthKey) -> Result<Option<GroundTruth>> {
    let buf = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut r = ByteReader::new(&buf);
    r.expect(MAGIC)?;
    let at = r.offset();
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::format(at, format!("unsupported version {version}")));
    }
    let dataset: [u8; 32] = r.bytes(32)?.try_into().expect("32 bytes");
    let workload: [u8; 32] = r.bytes(32)?.try_into().expect("32 bytes");
    let k = r.u32()?;
    if (TruthKey { dataset, workload, k }) != *key {
        return Ok(None);
    }
    let nq = r.u32()? as usize;
    let mut entries = Vec::with_capacity(nq.min(buf.len()));
    for _ in 0..nq {
        let len = r.len_at_most(k as usize)?;
        let short = r.u8()? != 0;
        let ids = (0..len).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let distances = (0..len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        entries.push(TruthEntry { ids, distances, short });
    }
    if !r.is_empty() {
        return Err(Error::format(r.offset(), "trailing bytes"));
    }
    Ok(Some(GroundTruth { k: k as usize, entries }))
}

/// Loads the truth for these inputs from `dir`, computing and storing it on
/// a miss.
pub fn cached_ground_truth(dir: &Path, ds: &AttributedDataset, queries: &[FilteredQuery], k: usize) -> Result<GroundTruth> {
    let key = TruthKey::new(ds, queries, k);
    let path: PathBuf = dir.join(key.file_name());
    if let Some(gt) = load_truth(&path, &key)? {
        log::debug!("ground truth cache hit: {}", path.display());
        return Ok(gt);
    }
    let gt = ground_truth(ds, queries, k)?;
    std::fs::create_dir_all(dir)?;
    save_truth(&path, &key, &gt)?;
    Ok(gt)
}
