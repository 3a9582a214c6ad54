//! C ABI for `sumset-core`. Float mode only.
//!
//! Every function returns a [`SumsetStatus`] and writes results through out
//! pointers. On failure, [`sumset_last_error`] describes the problem. Tables
//! and distributions are opaque handles released with their `_free`
//! function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use sumset_core::correlated::{accordion_probs, growth_rate, miss_pair_correlated, miss_single_correlated};
use sumset_core::fringe::{self, EnumerateOptions, FringeTable, Progress};
use sumset_core::misschance::{miss_pair, miss_single};
use sumset_core::moments::{expected_missing, expected_size, variance};
use sumset_core::montecarlo::{simulate_with, MissDistribution, SimModel, SimOptions};
use sumset_core::{CorrelatedParams, Error, ModelParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SumsetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidProbability = 2,
    OutOfRange = 3,
    InvalidArgument = 4,
    Unsupported = 5,
    Io = 6,
    Table = 7,
    Checkpoint = 8,
    Internal = 9,
}

/// A fringe table.
pub struct SumsetFringeTable(FringeTable);

/// A simulated histogram of missing-sum counts.
pub struct SumsetDistribution(MissDistribution);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SumsetStatus {
    match e {
        Error::InvalidProbability { .. } => SumsetStatus::InvalidProbability,
        Error::OutOfRange { .. } => SumsetStatus::OutOfRange,
        Error::InvalidArgument(_) | Error::NotAPath { .. } => SumsetStatus::InvalidArgument,
        Error::NotExact(_) => SumsetStatus::Unsupported,
        Error::Io(_) => SumsetStatus::Io,
        Error::Table(_) | Error::Csv(_) | Error::Json(_) => SumsetStatus::Table,
        Error::Checkpoint(_) => SumsetStatus::Checkpoint,
        Error::Overflow(_) => SumsetStatus::Internal,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SumsetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SumsetStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("{what} is null"));
            SumsetStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            SumsetStatus::Internal
        }
    }
}

unsafe fn put<T>(out: *mut T, what: &'static str, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn table<'a>(t: *const SumsetFringeTable) -> Result<&'a FringeTable, Fail> {
    t.as_ref().map(|t| &t.0).ok_or(Fail::Null("table"))
}

unsafe fn dist<'a>(d: *const SumsetDistribution) -> Result<&'a MissDistribution, Fail> {
    d.as_ref().map(|d| &d.0).ok_or(Fail::Null("distribution"))
}

unsafe fn path(s: *const c_char) -> Result<PathBuf, Fail> {
    if s.is_null() {
        return Err(Fail::Null("path"));
    }
    let text = CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Error::InvalidArgument("path is not UTF-8".into()))?;
    Ok(PathBuf::from(text))
}

/// Message for the last failure on this thread; valid until the next call
/// that fails. Empty when nothing has failed.
#[no_mangle]
pub extern "C" fn sumset_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// P(i not in A+A).
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_miss_single(n: usize, i: usize, p: f64, out: *mut f64) -> SumsetStatus {
    guard(|| put(out, "out", miss_single(n, i, &ModelParams::new(p)?)?))
}

/// P(i and j not in A+A).
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_miss_pair(n: usize, i: usize, j: usize, p: f64, out: *mut f64) -> SumsetStatus {
    guard(|| put(out, "out", miss_pair(n, i, j, &ModelParams::new(p)?)?))
}

/// E|A+A|.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_expected_size(n: usize, p: f64, out: *mut f64) -> SumsetStatus {
    guard(|| put(out, "out", expected_size(n, &ModelParams::new(p)?)?))
}

/// E[2n-1-|A+A|].
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_expected_missing(n: usize, p: f64, out: *mut f64) -> SumsetStatus {
    guard(|| put(out, "out", expected_missing(n, &ModelParams::new(p)?)?))
}

/// Var|A+A|.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_variance(n: usize, p: f64, out: *mut f64) -> SumsetStatus {
    guard(|| put(out, "out", variance(n, &ModelParams::new(p)?)?))
}

/// P(k not in A+B).
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_correlated_miss_single(n: usize, k: usize, p: f64, p1: f64, p2: f64, out: *mut f64) -> SumsetStatus {
    guard(|| put(out, "out", miss_single_correlated(n, k, &CorrelatedParams::new(p, p1, p2)?)?))
}

/// P(i and j not in A+B), `i < j`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_correlated_miss_pair(
    n: usize,
    i: usize,
    j: usize,
    p: f64,
    p1: f64,
    p2: f64,
    out: *mut f64,
) -> SumsetStatus {
    guard(|| put(out, "out", miss_pair_correlated(n, i, j, &CorrelatedParams::new(p, p1, p2)?)?))
}

/// Accordion probabilities `x, y, z` at length `len`.
///
/// # Safety
/// `x`, `y`, `z` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_accordion(len: usize, p: f64, p1: f64, p2: f64, x: *mut f64, y: *mut f64, z: *mut f64) -> SumsetStatus {
    guard(|| {
        let s = accordion_probs(len, &CorrelatedParams::new(p, p1, p2)?)?;
        put(x, "x", s.x)?;
        put(y, "y", s.y)?;
        put(z, "z", s.z)
    })
}

/// Spectral radius of the accordion governing matrix.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_growth_rate(p: f64, p1: f64, p2: f64, out: *mut f64) -> SumsetStatus {
    guard(|| put(out, "out", growth_rate(&CorrelatedParams::new(p, p1, p2)?)))
}

/// Tabulates every fringe of width `l`. `threads == 0` uses all cores.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_fringe_enumerate(
    l: usize,
    a: usize,
    kmax: usize,
    threads: usize,
    out: *mut *mut SumsetFringeTable,
) -> SumsetStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let opts = EnumerateOptions {
            threads: (threads > 0).then_some(threads),
            ..Default::default()
        };
        let Progress::Done(t) = fringe::enumerate_with(l, a, kmax, &opts)? else {
            return Err(Error::InvalidArgument("enumeration paused".into()).into());
        };
        put(out, "out", Box::into_raw(Box::new(SumsetFringeTable(t))))
    })
}

/// Reads a table written by [`sumset_fringe_save`] or the command line.
///
/// # Safety
/// `csv_path` must be null or a NUL-terminated string; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_fringe_load(csv_path: *const c_char, out: *mut *mut SumsetFringeTable) -> SumsetStatus {
    guard(|| {
        let path = path(csv_path)?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let t = fringe::read_table(&path)?;
        put(out, "out", Box::into_raw(Box::new(SumsetFringeTable(t))))
    })
}

/// Writes the table as CSV plus its JSON sidecar.
///
/// # Safety
/// `table` must come from this library; `csv_path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sumset_fringe_save(table: *const SumsetFringeTable, csv_path: *const c_char) -> SumsetStatus {
    guard(|| {
        let t = self::table(table)?;
        fringe::write_table(t, &path(csv_path)?, None)?;
        Ok(())
    })
}

/// # Safety
/// `table` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sumset_fringe_free(table: *mut SumsetFringeTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Width, anchor and largest `k` of a table.
///
/// # Safety
/// `table` must come from this library; outputs must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_fringe_shape(table: *const SumsetFringeTable, l: *mut usize, a: *mut usize, kmax: *mut usize) -> SumsetStatus {
    guard(|| {
        let t = self::table(table)?;
        put(l, "l", t.l)?;
        put(a, "a", t.a)?;
        put(kmax, "kmax", t.kmax)
    })
}

/// `c[k][i]`, or `c_a[k][i]` when `anchored` is nonzero.
///
/// # Safety
/// `table` must come from this library; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_fringe_count(table: *const SumsetFringeTable, k: usize, i: usize, anchored: i32, out: *mut u64) -> SumsetStatus {
    guard(|| {
        let t = self::table(table)?;
        if k > t.l || i > t.l {
            return Err(Error::InvalidArgument(format!("(k, i) = ({k}, {i}) outside 0..={}", t.l)).into());
        }
        let rows = if anchored != 0 { &t.c_a } else { &t.c };
        put(out, "out", rows[k][i])
    })
}

/// `min_a[k]` and `tau[k]`; `-1` where no fringe qualifies.
///
/// # Safety
/// `table` must come from this library; outputs must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_fringe_minima(table: *const SumsetFringeTable, k: usize, min_a: *mut i64, tau: *mut i64) -> SumsetStatus {
    guard(|| {
        let t = self::table(table)?;
        if k > t.kmax {
            return Err(Error::InvalidArgument(format!("k = {k} above kmax = {}", t.kmax)).into());
        }
        let v = |x: Option<u32>| x.map_or(-1, i64::from);
        put(min_a, "min_a", v(t.min_a[k]))?;
        put(tau, "tau", v(t.tau[k]))
    })
}

/// `P(L_k)` and `P(L_k^a)`.
///
/// # Safety
/// `table` must come from this library; outputs must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_fringe_prob(table: *const SumsetFringeTable, k: usize, p: f64, lk: *mut f64, lka: *mut f64) -> SumsetStatus {
    guard(|| {
        let t = self::table(table)?;
        let m = ModelParams::new(p)?;
        put(lk, "lk", t.prob_lk(k, &m)?)?;
        put(lka, "lka", t.prob_lka(k, &m)?)
    })
}

/// Lower and upper bounds on the limiting probability of exactly `k` missing sums.
///
/// # Safety
/// `table` must come from this library; outputs must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_fringe_bounds(table: *const SumsetFringeTable, k: usize, p: f64, lower: *mut f64, upper: *mut f64) -> SumsetStatus {
    guard(|| {
        let t = self::table(table)?;
        let m = ModelParams::new(p)?;
        put(lower, "lower", t.lower_bound_mk(k, &m)?)?;
        put(upper, "upper", t.upper_bound_mk(k, &m)?)
    })
}

/// `LB(0) > UB(1) < LB(2)` at one `p`; `divot` is set to 1 or 0.
///
/// # Safety
/// `table` must come from this library; outputs must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_fringe_certify_divot(
    table: *const SumsetFringeTable,
    p: f64,
    lb0: *mut f64,
    ub1: *mut f64,
    lb2: *mut f64,
    divot: *mut i32,
) -> SumsetStatus {
    guard(|| {
        let t = self::table(table)?;
        let v = t.certify_divot(&ModelParams::new(p)?)?;
        put(lb0, "lb0", v.lb0)?;
        put(ub1, "ub1", v.ub1)?;
        put(lb2, "lb2", v.lb2)?;
        put(divot, "divot", v.divot_at_1 as i32)
    })
}

unsafe fn simulate_into(n: usize, model: SimModel, trials: u64, seed: u64, force_zero: i32, out: *mut *mut SumsetDistribution) -> SumsetStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let opts = SimOptions {
            force_zero: force_zero != 0,
            threads: None,
        };
        let d = simulate_with(n, model, trials, seed, &opts)?;
        put(out, "out", Box::into_raw(Box::new(SumsetDistribution(d))))
    })
}

/// Simulates `trials` draws of `A ⊆ [0, n-1]`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_simulate(n: usize, p: f64, trials: u64, seed: u64, force_zero: i32, out: *mut *mut SumsetDistribution) -> SumsetStatus {
    simulate_into(n, SimModel::Independent { p }, trials, seed, force_zero, out)
}

/// Simulates the correlated pair `(A, B)`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_simulate_correlated(
    n: usize,
    p: f64,
    p1: f64,
    p2: f64,
    trials: u64,
    seed: u64,
    force_zero: i32,
    out: *mut *mut SumsetDistribution,
) -> SumsetStatus {
    simulate_into(n, SimModel::Correlated { p, p1, p2 }, trials, seed, force_zero, out)
}

/// Number of histogram cells, `2n`.
///
/// # Safety
/// `d` must come from this library; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_distribution_len(d: *const SumsetDistribution, out: *mut usize) -> SumsetStatus {
    guard(|| put(out, "out", dist(d)?.counts.len()))
}

/// Trials that missed exactly `k` sums, and their frequency.
///
/// # Safety
/// `d` must come from this library; outputs must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_distribution_get(d: *const SumsetDistribution, k: usize, count: *mut u64, freq: *mut f64) -> SumsetStatus {
    guard(|| {
        let d = dist(d)?;
        let c = *d
            .counts
            .get(k)
            .ok_or_else(|| Error::InvalidArgument(format!("k = {k} outside 0..{}", d.counts.len())))?;
        put(count, "count", c)?;
        put(freq, "freq", d.freq(k))
    })
}

/// Copies the counts into `buf`, which holds `cap` entries.
///
/// # Safety
/// `d` must come from this library; `buf` must be null or valid for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn sumset_distribution_counts(d: *const SumsetDistribution, buf: *mut u64, cap: usize) -> SumsetStatus {
    guard(|| {
        let d = dist(d)?;
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        if cap < d.counts.len() {
            return Err(Error::InvalidArgument(format!("buffer holds {cap}, need {}", d.counts.len())).into());
        }
        ptr::copy_nonoverlapping(d.counts.as_ptr(), buf, d.counts.len());
        Ok(())
    })
}

/// # Safety
/// `d` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sumset_distribution_free(d: *mut SumsetDistribution) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}
