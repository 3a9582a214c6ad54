//! Exhaustive enumeration of fringes `L ⊆ [0, l-1]`.
//!
//! Masks are split into chunks by their high bits. Inside a chunk a depth
//! first walk over the low bits updates the sumset incrementally:
//! `(L ∪ {b}) + (L ∪ {b}) = (L+L) | (L << b) | (1 << 2b)`.

use std::fs;
use std::path::{Path, PathBuf};

use num_traits::PrimInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::FringeTable;
use crate::error::{Error, Result};

pub const MAX_WIDTH: usize = 34;
pub const CHECKPOINT_VERSION: u32 = 1;
const DEFAULT_CHUNK_BITS: u32 = 20;

#[derive(Debug, Clone)]
pub struct EnumerateOptions {
    pub threads: Option<usize>,
    pub checkpoint: Option<PathBuf>,
    /// Fringes per chunk is `2^chunk_bits` (capped at `2^l`).
    pub chunk_bits: u32,
    /// Stop after this many chunks in this call; the checkpoint records where.
    pub max_chunks: Option<u64>,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        EnumerateOptions {
            threads: None,
            checkpoint: None,
            chunk_bits: DEFAULT_CHUNK_BITS,
            max_chunks: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Progress {
    Done(FringeTable),
    Paused { next_chunk: u64, total_chunks: u64 },
}

/// Running totals. `c` and `c_a` are flattened `[k][i]`; minima use
/// `u32::MAX` for "no fringe seen".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Tally {
    c: Vec<u64>,
    c_a: Vec<u64>,
    tau: Vec<u32>,
}

impl Tally {
    fn new(l: usize) -> Self {
        Tally {
            c: vec![0; (l + 1) * (l + 1)],
            c_a: vec![0; (l + 1) * (l + 1)],
            tau: vec![u32::MAX; l + 1],
        }
    }

    fn merge(&mut self, other: &Tally) -> Result<()> {
        for (x, y) in self.c.iter_mut().zip(&other.c).chain(self.c_a.iter_mut().zip(&other.c_a)) {
            *x = x.checked_add(*y).ok_or_else(|| Error::Overflow("fringe count".into()))?;
        }
        for (x, y) in self.tau.iter_mut().zip(&other.tau) {
            *x = (*x).min(*y);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    l: usize,
    low_bits: u32,
    low_mask: u64,
    anchor_lo: u32,
    anchor_len: u32,
    tau_mask: u64,
}

impl Layout {
    fn new(l: usize, a: usize, chunk_bits: u32) -> Self {
        let tau_top = (l - a + 1).min(l - 1);
        Layout {
            l,
            low_bits: chunk_bits.min(l as u32),
            low_mask: (1u64 << l) - 1,
            anchor_lo: l as u32,
            anchor_len: (l - a + 1) as u32,
            tau_mask: (1u64 << (tau_top + 1)) - 1,
        }
    }

    fn total_chunks(&self) -> u64 {
        1u64 << (self.l as u32 - self.low_bits)
    }
}

/// Sumset of `mask` as a bit mask, by shifted-OR over its elements.
pub fn fringe_sumset(mask: u64) -> u128 {
    let wide = mask as u128;
    let mut acc = 0u128;
    let mut rest = mask;
    while rest != 0 {
        let b = rest.trailing_zeros();
        acc |= wide << b;
        rest &= rest - 1;
    }
    acc
}

struct Walker<'a, W> {
    layout: &'a Layout,
    anchor: W,
    low: W,
    tally: &'a mut Tally,
}

impl<W: PrimInt> Walker<'_, W> {
    #[inline(always)]
    fn leaf(&mut self, set: u64, sums: W) {
        let l = self.layout.l;
        let hit = (sums & self.low).count_ones() as usize;
        let k = l - hit;
        let i = set.count_ones() as usize;
        let idx = k * (l + 1) + i;
        self.tally.c[idx] += 1;
        let t = (set & self.layout.tau_mask).count_ones();
        if t < self.tally.tau[k] {
            self.tally.tau[k] = t;
        }
        if sums & self.anchor == self.anchor {
            self.tally.c_a[idx] += 1;
        }
    }

    fn walk(&mut self, bit: u32, set: u64, sums: W) {
        if bit == 0 {
            self.leaf(set, sums);
            return;
        }
        let b = bit - 1;
        self.walk(b, set, sums);
        let wide = W::from(set).unwrap();
        let added = sums | (wide << b as usize) | (W::one() << (2 * b) as usize);
        self.walk(b, set | (1u64 << b), added);
    }
}

fn run_chunk_with<W: PrimInt>(layout: &Layout, chunk: u64) -> Tally {
    let mut tally = Tally::new(layout.l);
    let high = chunk << layout.low_bits;
    let sums = W::from(fringe_sumset(high)).unwrap();
    let anchor = ((W::one() << layout.anchor_len as usize) - W::one()) << layout.anchor_lo as usize;
    let low = W::from(layout.low_mask).unwrap();
    let mut walker = Walker {
        layout,
        anchor,
        low,
        tally: &mut tally,
    };
    walker.walk(layout.low_bits, high, sums);
    tally
}

fn run_chunk(layout: &Layout, chunk: u64) -> Tally {
    if 2 * layout.l <= 64 {
        run_chunk_with::<u64>(layout, chunk)
    } else {
        run_chunk_with::<u128>(layout, chunk)
    }
}

/// Resumable enumeration state, serialised with a SHA-256 digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub l: usize,
    pub a: usize,
    pub kmax: usize,
    pub chunk_bits: u32,
    pub next_chunk: u64,
    pub total_chunks: u64,
    tally: Tally,
    pub digest: String,
}

impl Checkpoint {
    fn compute_digest(&self) -> Result<String> {
        let mut unsigned = self.clone();
        unsigned.digest.clear();
        let bytes = serde_json::to_vec(&unsigned)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    fn seal(mut self) -> Result<Self> {
        self.digest = self.compute_digest()?;
        Ok(self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_slice(&fs::read(path)?)
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", ck.version)));
        }
        if ck.compute_digest()? != ck.digest {
            return Err(Error::Checkpoint("digest mismatch".into()));
        }
        let cells = (ck.l + 1) * (ck.l + 1);
        if ck.tally.c.len() != cells || ck.tally.c_a.len() != cells || ck.tally.tau.len() != ck.l + 1 {
            return Err(Error::Checkpoint("tally shape does not match l".into()));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(self)?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

fn check_request(l: usize, a: usize, kmax: usize) -> Result<()> {
    if l == 0 || l > MAX_WIDTH {
        return Err(Error::out_of_range("l", l, format!("1..={MAX_WIDTH}")));
    }
    if a == 0 || a > l {
        return Err(Error::out_of_range("a", a, format!("1..={l}")));
    }
    if kmax > l {
        return Err(Error::out_of_range("kmax", kmax, format!("0..={l}")));
    }
    Ok(())
}

/// Enumerates every fringe of width `l` in one call.
pub fn enumerate(l: usize, a: usize, kmax: usize) -> Result<FringeTable> {
    match enumerate_with(l, a, kmax, &EnumerateOptions::default())? {
        Progress::Done(t) => Ok(t),
        Progress::Paused { .. } => unreachable!("no chunk limit was set"),
    }
}

pub fn enumerate_with(l: usize, a: usize, kmax: usize, opts: &EnumerateOptions) -> Result<Progress> {
    check_request(l, a, kmax)?;
    let mut state = match opts.checkpoint.as_deref().filter(|p| p.exists()) {
        Some(path) => {
            let ck = Checkpoint::load(path)?;
            if (ck.l, ck.a, ck.kmax) != (l, a, kmax) {
                return Err(Error::Checkpoint(format!(
                    "checkpoint is for (l={}, a={}, kmax={}), requested (l={l}, a={a}, kmax={kmax})",
                    ck.l, ck.a, ck.kmax
                )));
            }
            ck
        }
        None => {
            let layout = Layout::new(l, a, opts.chunk_bits);
            Checkpoint {
                version: CHECKPOINT_VERSION,
                l,
                a,
                kmax,
                chunk_bits: layout.low_bits,
                next_chunk: 0,
                total_chunks: layout.total_chunks(),
                tally: Tally::new(l),
                digest: String::new(),
            }
        }
    };
    let layout = Layout::new(l, a, state.chunk_bits);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let batch = (pool.current_num_threads() as u64 * 8).max(16);
    let stop = opts
        .max_chunks
        .map_or(state.total_chunks, |m| state.next_chunk.saturating_add(m).min(state.total_chunks));
    while state.next_chunk < stop {
        let end = (state.next_chunk + batch).min(stop);
        let parts: Vec<Tally> = pool.install(|| {
            (state.next_chunk..end)
                .into_par_iter()
                .map(|chunk| run_chunk(&layout, chunk))
                .collect()
        });
        for part in &parts {
            state.tally.merge(part)?;
        }
        state.next_chunk = end;
        if let Some(path) = &opts.checkpoint {
            state = state.seal()?;
            state.save(path)?;
        }
    }
    if state.next_chunk < state.total_chunks {
        return Ok(Progress::Paused {
            next_chunk: state.next_chunk,
            total_chunks: state.total_chunks,
        });
    }
    Ok(Progress::Done(finish(l, a, kmax, &state.tally)))
}

fn finish(l: usize, a: usize, kmax: usize, tally: &Tally) -> FringeTable {
    let rows = |flat: &[u64]| flat.chunks(l + 1).map(<[u64]>::to_vec).collect::<Vec<_>>();
    let c = rows(&tally.c);
    let c_a = rows(&tally.c_a);
    let min_a = (0..=kmax)
        .map(|k| c_a[k].iter().position(|&x| x > 0).map(|i| i as u32))
        .collect();
    let tau = (0..=kmax)
        .map(|k| (tally.tau[k] != u32::MAX).then_some(tally.tau[k]))
        .collect();
    FringeTable {
        l,
        a,
        kmax,
        c,
        c_a,
        min_a,
        tau,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sums_of(bits: &[u32]) -> Vec<u32> {
        let mask = fringe_sumset(bits.iter().map(|b| 1u64 << b).sum());
        (0..128).filter(|k| mask >> k & 1 == 1).collect()
    }

    #[test]
    fn sumset_examples() {
        assert_eq!(sums_of(&[0, 1]), vec![0, 1, 2]);
        assert_eq!(sums_of(&[0, 1, 3]), vec![0, 1, 2, 3, 4, 6]);
        assert!(sums_of(&[]).is_empty());
        assert_eq!(sums_of(&[33]), vec![66]);
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(enumerate(35, 12, 5).is_err());
        assert!(enumerate(10, 0, 2).is_err());
        assert!(enumerate(10, 11, 2).is_err());
        assert!(enumerate(10, 3, 11).is_err());
    }

    #[test]
    fn chunking_does_not_change_the_table() {
        let whole = enumerate(12, 4, 3).unwrap();
        for bits in [0, 3, 7, 12] {
            let opts = EnumerateOptions {
                chunk_bits: bits,
                threads: Some(2),
                ..Default::default()
            };
            let Progress::Done(t) = enumerate_with(12, 4, 3, &opts).unwrap() else { panic!() };
            assert_eq!(t, whole);
        }
    }

    #[test]
    fn resume_from_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        let opts = EnumerateOptions {
            checkpoint: Some(path.clone()),
            chunk_bits: 6,
            max_chunks: Some(20),
            threads: Some(1),
        };
        let mut progress = enumerate_with(14, 5, 3, &opts).unwrap();
        let mut rounds = 1;
        while let Progress::Paused { next_chunk, total_chunks } = progress {
            assert!(next_chunk < total_chunks);
            progress = enumerate_with(14, 5, 3, &opts).unwrap();
            rounds += 1;
        }
        assert!(rounds > 1);
        let Progress::Done(t) = progress else { unreachable!() };
        assert_eq!(t, enumerate(14, 5, 3).unwrap());
        // a finished checkpoint resumes straight to the same table
        let Progress::Done(again) = enumerate_with(14, 5, 3, &opts).unwrap() else { panic!() };
        assert_eq!(again, t);
    }

    #[test]
    fn checkpoint_mismatch_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        let opts = EnumerateOptions {
            checkpoint: Some(path.clone()),
            chunk_bits: 4,
            max_chunks: Some(3),
            threads: Some(1),
        };
        enumerate_with(10, 4, 2, &opts).unwrap();
        let err = enumerate_with(10, 5, 2, &opts).unwrap_err();
        assert!(matches!(err, Error::Checkpoint(_)));

        let text = fs::read_to_string(&path).unwrap();
        let tampered = text.replacen("\"next_chunk\": 3", "\"next_chunk\": 2", 1);
        assert_ne!(text, tampered);
        fs::write(&path, tampered).unwrap();
        let err = enumerate_with(10, 4, 2, &opts).unwrap_err();
        assert!(err.to_string().contains("digest"));
    }
}
