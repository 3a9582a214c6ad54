//! Brute-force references. Every quantity is recomputed from its definition
//! by listing subsets and forming sums with plain loops.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fringe::FringeTable;
use crate::model::{CorrelatedParams, ModelParams};

pub const MAX_N: usize = 20;
pub const MAX_N_CORRELATED: usize = 9;
pub const MAX_FRINGE: usize = 18;

fn int(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn pow(x: &BigRational, e: usize) -> BigRational {
    (0..e).fold(BigRational::one(), |acc, _| acc * x)
}

/// Sums `a + b` with `a` in `left` and `b` in `right`, as a flag per sum.
fn sum_flags(left: &[usize], right: &[usize], len: usize) -> Vec<bool> {
    let mut out = vec![false; len];
    for &a in left {
        for &b in right {
            out[a + b] = true;
        }
    }
    out
}

fn members(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&k| mask >> k & 1 == 1).collect()
}

fn missing_key(flags: &[bool]) -> u64 {
    flags.iter().enumerate().filter(|(_, &f)| !f).fold(0, |acc, (s, _)| acc | 1 << s)
}

fn check_targets(n: usize, targets: &[usize]) -> Result<u64> {
    let mut key = 0u64;
    for &f in targets {
        if f > 2 * n - 2 {
            return Err(Error::out_of_range("target sum", f, format!("0..={}", 2 * n - 2)));
        }
        key |= 1 << f;
    }
    Ok(key)
}

/// All `2^n` subsets of `[0, n-1]`, grouped by the set of missing sums and
/// by cardinality.
#[derive(Debug, Clone)]
pub struct SubsetCensus {
    n: usize,
    by_missing: HashMap<u64, Vec<u64>>,
}

impl SubsetCensus {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_N {
            return Err(Error::out_of_range("n", n, format!("1..={MAX_N} for exhaustive enumeration")));
        }
        let mut by_missing: HashMap<u64, Vec<u64>> = HashMap::new();
        for mask in 0u64..1 << n {
            let set = members(mask, n);
            let key = missing_key(&sum_flags(&set, &set, 2 * n - 1));
            by_missing.entry(key).or_insert_with(|| vec![0; n + 1])[set.len()] += 1;
        }
        Ok(SubsetCensus { n, by_missing })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn weigh(&self, counts: &[u64], params: &ModelParams<BigRational>) -> BigRational {
        let (p, q) = (params.p(), params.q());
        counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(r, &c)| int(c) * pow(p, r) * pow(q, self.n - r))
            .fold(BigRational::zero(), |acc, t| acc + t)
    }

    pub fn law(&self, params: &ModelParams<BigRational>) -> ExactLaw {
        let n = self.n;
        let mut counts = vec![vec![0u64; n + 1]; 2 * n];
        for (key, by_size) in &self.by_missing {
            let k = key.count_ones() as usize;
            for (r, &c) in by_size.iter().enumerate() {
                counts[k][r] += c;
            }
        }
        let law: Vec<BigRational> = counts.iter().map(|c| self.weigh(c, params)).collect();
        let top = int(2 * n as u64 - 1);
        let mut mean = BigRational::zero();
        let mut second = BigRational::zero();
        for (k, m) in law.iter().enumerate() {
            let size = top.clone() - int(k as u64);
            mean += m * &size;
            second += m * &size * &size;
        }
        let variance = second - &mean * &mean;
        ExactLaw {
            n,
            p: params.p().clone(),
            law,
            mean,
            variance,
        }
    }

    /// `P(no target lies in A+A)`.
    pub fn miss(&self, targets: &[usize], params: &ModelParams<BigRational>) -> Result<BigRational> {
        let want = check_targets(self.n, targets)?;
        let mut counts = vec![0u64; self.n + 1];
        for (key, by_size) in &self.by_missing {
            if key & want == want {
                for (r, &c) in by_size.iter().enumerate() {
                    counts[r] += c;
                }
            }
        }
        Ok(self.weigh(&counts, params))
    }
}

/// The law of the number of missing sums, with the mean and variance of `|A+A|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactLaw {
    pub n: usize,
    #[serde(serialize_with = "ser_ratio")]
    pub p: BigRational,
    /// `law[k]` for `k` in `0..=2n-1`.
    #[serde(serialize_with = "ser_ratios")]
    pub law: Vec<BigRational>,
    #[serde(serialize_with = "ser_ratio")]
    pub mean: BigRational,
    #[serde(serialize_with = "ser_ratio")]
    pub variance: BigRational,
}

fn ser_ratio<S: serde::Serializer>(v: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn ser_ratios<S: serde::Serializer>(v: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| r.to_string()))
}

pub fn exact_law(n: usize, params: &ModelParams<BigRational>) -> Result<ExactLaw> {
    Ok(SubsetCensus::new(n)?.law(params))
}

pub fn exact_miss(n: usize, targets: &[usize], params: &ModelParams<BigRational>) -> Result<BigRational> {
    SubsetCensus::new(n)?.miss(targets, params)
}

/// All `4^n` joint memberships, grouped by missing sums of `A+B` and by
/// how many indices fall in each of the four joint cells.
#[derive(Debug, Clone)]
pub struct CorrelatedCensus {
    n: usize,
    by_missing: HashMap<u64, HashMap<[u8; 4], u64>>,
}

impl CorrelatedCensus {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_N_CORRELATED {
            return Err(Error::out_of_range(
                "n",
                n,
                format!("1..={MAX_N_CORRELATED} for joint enumeration"),
            ));
        }
        let mut by_missing: HashMap<u64, HashMap<[u8; 4], u64>> = HashMap::new();
        for a_mask in 0u64..1 << n {
            let a = members(a_mask, n);
            for b_mask in 0u64..1 << n {
                let b = members(b_mask, n);
                let mut cells = [0u8; 4];
                for k in 0..n {
                    let (in_a, in_b) = (a_mask >> k & 1 == 1, b_mask >> k & 1 == 1);
                    let cell = match (in_a, in_b) {
                        (true, true) => 0,
                        (true, false) => 1,
                        (false, true) => 2,
                        (false, false) => 3,
                    };
                    cells[cell] += 1;
                }
                let key = missing_key(&sum_flags(&a, &b, 2 * n - 1));
                *by_missing.entry(key).or_default().entry(cells).or_insert(0) += 1;
            }
        }
        Ok(CorrelatedCensus { n, by_missing })
    }

    /// `P(no target lies in A+B)`.
    pub fn miss(&self, targets: &[usize], params: &CorrelatedParams<BigRational>) -> Result<BigRational> {
        let want = check_targets(self.n, targets)?;
        let mut counts: HashMap<[u8; 4], u64> = HashMap::new();
        for (key, cells) in &self.by_missing {
            if key & want == want {
                for (c, &v) in cells {
                    *counts.entry(*c).or_insert(0) += v;
                }
            }
        }
        let w = params.joint();
        Ok(counts
            .iter()
            .map(|(cells, &c)| (0..4).fold(int(c), |acc, t| acc * pow(&w[t], cells[t] as usize)))
            .fold(BigRational::zero(), |acc, t| acc + t))
    }
}

pub fn exact_miss_correlated(n: usize, targets: &[usize], params: &CorrelatedParams<BigRational>) -> Result<BigRational> {
    CorrelatedCensus::new(n)?.miss(targets, params)
}

/// The fringe table by visiting every subset of `[0, l-1]` separately.
pub fn naive_fringe(l: usize, a: usize, kmax: usize) -> Result<FringeTable> {
    if l == 0 || l > MAX_FRINGE {
        return Err(Error::out_of_range("l", l, format!("1..={MAX_FRINGE} for the naive table")));
    }
    if a == 0 || a > l {
        return Err(Error::out_of_range("a", a, format!("1..={l}")));
    }
    if kmax > l {
        return Err(Error::out_of_range("kmax", kmax, format!("0..={l}")));
    }
    let mut c = vec![vec![0u64; l + 1]; l + 1];
    let mut c_a = vec![vec![0u64; l + 1]; l + 1];
    let mut tau: Vec<Option<u32>> = vec![None; l + 1];
    let tau_top = (l - a + 1).min(l - 1);
    for mask in 0u64..1 << l {
        let set = members(mask, l);
        let sums = sum_flags(&set, &set, 2 * l - 1);
        let k = (0..l).filter(|&s| !sums[s]).count();
        let i = set.len();
        c[k][i] += 1;
        if (l..=2 * l - a).all(|s| sums.get(s) == Some(&true)) {
            c_a[k][i] += 1;
        }
        let t = set.iter().filter(|&&x| x <= tau_top).count() as u32;
        tau[k] = Some(tau[k].map_or(t, |old| old.min(t)));
    }
    let min_a = (0..=kmax)
        .map(|k| (0..=l).find(|&i| c_a[k][i] > 0).map(|i| i as u32))
        .collect();
    tau.truncate(kmax + 1);
    Ok(FringeTable {
        l,
        a,
        kmax,
        c,
        c_a,
        min_a,
        tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ratio;

    fn exact(num: i64, den: i64) -> ModelParams<BigRational> {
        ModelParams::new(ratio(num, den)).unwrap()
    }

    #[test]
    fn law_examples() {
        let law = exact_law(2, &exact(1, 2)).unwrap();
        assert_eq!(law.law, vec![ratio(1, 4), ratio(0, 1), ratio(1, 2), ratio(1, 4)]);
        assert_eq!(law.mean, ratio(5, 4));
        assert_eq!(law.variance, ratio(19, 16));
        let law = exact_law(1, &exact(1, 3)).unwrap();
        assert_eq!(law.law, vec![ratio(1, 3), ratio(2, 3)]);
    }

    #[test]
    fn law_sums_to_one() {
        for n in 1..=10 {
            let law = exact_law(n, &exact(2, 7)).unwrap();
            let total = law.law.iter().fold(ratio(0, 1), |acc, x| acc + x);
            assert_eq!(total, ratio(1, 1));
            assert_eq!(law.law.len(), 2 * n);
        }
    }

    #[test]
    fn miss_examples() {
        assert_eq!(exact_miss(5, &[0], &exact(1, 3)).unwrap(), ratio(2, 3));
        assert_eq!(exact_miss(4, &[1, 3], &exact(1, 2)).unwrap(), ratio(1, 2));
        assert_eq!(exact_miss(4, &[], &exact(1, 2)).unwrap(), ratio(1, 1));
        assert!(exact_miss(4, &[7], &exact(1, 2)).is_err());
        assert!(exact_miss(21, &[0], &exact(1, 2)).is_err());
    }

    #[test]
    fn correlated_examples() {
        let c = CorrelatedParams::new(ratio(1, 2), ratio(1, 3), ratio(1, 4)).unwrap();
        assert_eq!(exact_miss_correlated(4, &[0], &c).unwrap(), ratio(5, 6));
        let same = CorrelatedParams::identical(ratio(1, 3)).unwrap();
        let census = SubsetCensus::new(5).unwrap();
        let joint = CorrelatedCensus::new(5).unwrap();
        for f in [vec![0], vec![3], vec![2, 5], vec![1, 8]] {
            assert_eq!(joint.miss(&f, &same).unwrap(), census.miss(&f, &exact(1, 3)).unwrap());
        }
        assert!(CorrelatedCensus::new(10).is_err());
    }

    #[test]
    fn naive_fringe_examples() {
        let t = naive_fringe(1, 1, 1).unwrap();
        assert_eq!(t.c, vec![vec![0, 1], vec![1, 0]]);
        let t = naive_fringe(4, 2, 4).unwrap();
        let mass: u64 = t.c.iter().flatten().sum();
        assert_eq!(mass, 16);
        t.validate().unwrap();
        assert!(naive_fringe(19, 3, 2).is_err());
        assert!(naive_fringe(5, 6, 2).is_err());
    }

    #[test]
    fn naive_fringe_matches_engine() {
        for l in 1..=10 {
            for a in 1..=l {
                assert_eq!(naive_fringe(l, a, l.min(5)).unwrap(), crate::fringe::enumerate(l, a, l.min(5)).unwrap());
            }
        }
    }
}
