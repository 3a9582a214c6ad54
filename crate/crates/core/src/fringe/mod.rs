//! Fringe statistics and the certified bounds on `m_p(k)`, the limiting
//! probability that exactly `k` sums are missing.
//!
//! Nearly all missing sums sit in the first or last `l` positions. A
//! [`FringeTable`] records, for every `k` and every fringe size `i`, how
//! many fringes `L ⊆ [0, l-1]` leave exactly `k` of `[0, l-1]` out of
//! `L+L` (`c`), and how many of those also cover `[l, 2l-a]` (`c_a`).

mod engine;
mod io;

pub use engine::{enumerate, enumerate_with, fringe_sumset, Checkpoint, EnumerateOptions, Progress, MAX_WIDTH};
pub use io::{read_table, sidecar_path, write_table, TableSidecar};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::misschance::event_c_upper_bound;
use crate::model::{ModelParams, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FringeTable {
    pub l: usize,
    pub a: usize,
    pub kmax: usize,
    /// `c[k][i]` for `k, i` in `0..=l`.
    pub c: Vec<Vec<u64>>,
    /// `c_a[k][i]` for `k, i` in `0..=l`.
    pub c_a: Vec<Vec<u64>>,
    /// Smallest anchored fringe for each `k <= kmax`.
    pub min_a: Vec<Option<u32>>,
    /// Smallest `|L ∩ [0, l-a+1]|` over fringes missing exactly `k`, for `k <= kmax`.
    pub tau: Vec<Option<u32>>,
}

impl FringeTable {
    pub fn total(&self) -> u64 {
        1u64 << self.l
    }

    /// Structural checks: shape, column sums `Σ_k c[k][i] = C(l, i)`,
    /// `c_a <= c`, and `min_a` agreeing with the first nonzero `c_a` entry.
    pub fn validate(&self) -> Result<()> {
        let l = self.l;
        let bad = |m: String| Err(Error::Table(m));
        if self.c.len() != l + 1 || self.c_a.len() != l + 1 {
            return bad(format!("expected {} rows", l + 1));
        }
        if self.c.iter().chain(&self.c_a).any(|r| r.len() != l + 1) {
            return bad(format!("expected {} columns", l + 1));
        }
        if self.kmax > l || self.min_a.len() != self.kmax + 1 || self.tau.len() != self.kmax + 1 {
            return bad("min_a and tau must have kmax + 1 entries".into());
        }
        let mut binom = 1u64;
        for i in 0..=l {
            let col: u64 = self.c.iter().map(|r| r[i]).sum();
            if col != binom {
                return bad(format!("column {i} sums to {col}, expected {binom}"));
            }
            binom = binom * (l - i) as u64 / (i + 1) as u64;
        }
        for k in 0..=l {
            if (0..=l).any(|i| self.c_a[k][i] > self.c[k][i]) {
                return bad(format!("row {k}: c_a exceeds c"));
            }
        }
        for k in 0..=self.kmax {
            let first = self.c_a[k].iter().position(|&x| x > 0).map(|i| i as u32);
            if first != self.min_a[k] {
                return bad(format!("min_a[{k}] disagrees with c_a"));
            }
        }
        Ok(())
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k > self.l {
            return Err(Error::out_of_range("k", k, format!("0..={}", self.l)));
        }
        Ok(())
    }

    fn eval<S: Scalar>(&self, row: &[u64], params: &ModelParams<S>) -> S {
        let (p, q) = (params.p(), params.q());
        S::sum_all(
            row.iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(i, &c)| S::from_u64(c) * p.powu(i as u64) * q.powu((self.l - i) as u64)),
        )
    }

    /// `P(L_k)`: the fringe misses exactly `k` of `[0, l-1]`.
    pub fn prob_lk<S: Scalar>(&self, k: usize, params: &ModelParams<S>) -> Result<S> {
        self.check_k(k)?;
        Ok(self.eval(&self.c[k], params))
    }

    /// `P(L_k^a)`: as [`prob_lk`](Self::prob_lk), and `[l, 2l-a] ⊆ L+L`.
    pub fn prob_lka<S: Scalar>(&self, k: usize, params: &ModelParams<S>) -> Result<S> {
        self.check_k(k)?;
        Ok(self.eval(&self.c_a[k], params))
    }

    /// `Σ_i P(L_i) P(L_{k-i})` plus the bound on a stray missing sum
    /// outside both fringes.
    pub fn upper_bound_mk<S: Scalar>(&self, k: usize, params: &ModelParams<S>) -> Result<S> {
        self.check_k(k)?;
        let probs: Vec<S> = (0..=k).map(|i| self.eval(&self.c[i], params)).collect();
        let conv = S::sum_all((0..=k).map(|i| probs[i].clone() * probs[k - i].clone()));
        Ok(conv + event_c_upper_bound(self.l, params)?)
    }

    /// `Σ_i P(L_i^a) P(L_{k-i}^a) · max(0, bracket)`, where the bracket
    /// discounts the chance that the bulk or the anchored window fails.
    pub fn lower_bound_mk<S: Scalar>(&self, k: usize, params: &ModelParams<S>) -> Result<S> {
        if self.a < 3 {
            return Err(Error::out_of_range("a", self.a, ">= 3 for the lower bound"));
        }
        if k > self.kmax {
            return Err(Error::out_of_range("k", k, format!("0..={} (table kmax)", self.kmax)));
        }
        let q = params.q().clone();
        let window = S::from_u64(self.a as u64 - 2);
        let bulk = (S::one() + q.clone()) / (params.p().clone() * params.p().clone());
        let terms = (0..=k).filter_map(|i| {
            let j = k - i;
            let (ti, tj) = (self.tau[i]?, self.tau[j]?);
            let (mi, mj) = (self.min_a[i]?, self.min_a[j]?);
            let bracket = S::one()
                - window.clone() * (q.powu(ti as u64) + q.powu(tj as u64))
                - bulk.clone() * (q.powu(mi as u64) + q.powu(mj as u64));
            if bracket <= S::zero() {
                return None;
            }
            Some(self.eval(&self.c_a[i], params) * self.eval(&self.c_a[j], params) * bracket)
        });
        Ok(S::sum_all(terms.collect::<Vec<_>>()))
    }

    /// Evaluates `LB(0) > UB(1) < LB(2)` at one `p`.
    pub fn certify_divot<S: Scalar>(&self, params: &ModelParams<S>) -> Result<DivotVerdict<S>> {
        if self.kmax < 2 {
            return Err(Error::out_of_range("kmax", self.kmax, ">= 2 to certify a divot"));
        }
        let lb0 = self.lower_bound_mk(0, params)?;
        let ub1 = self.upper_bound_mk(1, params)?;
        let lb2 = self.lower_bound_mk(2, params)?;
        let divot_at_1 = lb0 > ub1 && ub1 < lb2;
        Ok(DivotVerdict {
            p: params.p().clone(),
            lb0,
            ub1,
            lb2,
            divot_at_1,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivotVerdict<S> {
    pub p: S,
    pub lb0: S,
    pub ub1: S,
    pub lb2: S,
    pub divot_at_1: bool,
}

/// Certifies a divot at one on every point of a float grid.
pub fn certify_divot_grid(table: &FringeTable, grid: &[f64]) -> Result<Vec<DivotVerdict<f64>>> {
    grid.iter()
        .map(|&p| table.certify_divot(&ModelParams::new(p)?))
        .collect()
}

/// `start, start + step, ...` up to `end`, each rounded to twelve decimals
/// so that `0.680, 0.681, ...` come out as typed.
pub fn p_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || end < start {
        return Err(Error::InvalidArgument(format!("bad grid {start}..{end} step {step}")));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}
