//! The correlated sumset `A+B`: `i ∈ A` with probability `p`, then `i ∈ B`
//! with probability `p1` if `i ∈ A` and `p2` otherwise, independently over `i`.
//!
//! A path `k_1 - ... - k_m` of the ordinary condition graph lifts to an
//! accordion: the `A`- and `B`-copies of consecutive indices may not both be
//! chosen crosswise. `x_m` is the probability that an accordion of length
//! `m` carries no forbidden pair, `y_m` additionally has `k_m ∉ A`, `z_m`
//! additionally has `k_m ∉ B`.

use crate::error::{Error, Result};
use crate::graphs::{decompose_correlated, AccordionDecomposition, ConditionGraph};
use crate::model::{CorrelatedParams, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct AccordionState<S> {
    pub x: S,
    pub y: S,
    pub z: S,
}

/// `x_m, y_m, z_m` for `m = 0..=max_len`.
///
/// Stored values are the true joint probabilities, so `y_1 = q` and
/// `z_1 = q q2 + p q1`; [`state`](Self::state) reports the conventional
/// `(1, 1, 1)` at length one.
#[derive(Debug, Clone)]
pub struct AccordionTable<S> {
    w: [S; 4],
    x: Vec<S>,
    y: Vec<S>,
    z: Vec<S>,
}

impl<S: Scalar> AccordionTable<S> {
    pub fn new(params: &CorrelatedParams<S>, max_len: usize) -> Self {
        let [pp1, pq1, qp2, qq2] = params.joint();
        let mut t = AccordionTable {
            x: vec![S::one(), S::one()],
            y: vec![S::one(), params.q().clone()],
            z: vec![S::one(), qq2.clone() + pq1.clone()],
            w: [pp1, pq1, qp2, qq2],
        };
        t.extend_to(max_len);
        t
    }

    pub fn extend_to(&mut self, len: usize) {
        let [pp1, pq1, qp2, qq2] = self.w.clone();
        let pp1qq2 = pp1 * qq2.clone();
        while self.x.len() <= len {
            let m = self.x.len();
            let base = qq2.clone() * self.x[m - 1].clone();
            let y = base.clone() + qp2.clone() * self.y[m - 1].clone();
            let z = base.clone() + pq1.clone() * self.z[m - 1].clone();
            let x = y.clone() + pq1.clone() * self.z[m - 1].clone() + pp1qq2.clone() * self.x[m - 2].clone();
            self.x.push(x);
            self.y.push(y);
            self.z.push(z);
        }
    }

    pub fn max_len(&self) -> usize {
        self.x.len() - 1
    }

    /// `x_len`; panics past the table's length.
    pub fn x(&self, len: usize) -> &S {
        &self.x[len]
    }

    pub fn state(&self, len: usize) -> AccordionState<S> {
        if len <= 1 {
            return AccordionState {
                x: S::one(),
                y: S::one(),
                z: S::one(),
            };
        }
        AccordionState {
            x: self.x[len].clone(),
            y: self.y[len].clone(),
            z: self.z[len].clone(),
        }
    }

    /// An accordion of length `len` whose last index also may not lie in both
    /// `A` and `B`.
    pub fn looped(&self, len: usize) -> S {
        assert!(len >= 1, "a looped accordion has at least one index");
        let [_, pq1, qp2, qq2] = self.w.clone();
        let m = len - 1;
        qq2 * self.x[m].clone() + qp2 * self.y[m].clone() + pq1 * self.z[m].clone()
    }
}

pub fn accordion_probs<S: Scalar>(len: usize, params: &CorrelatedParams<S>) -> Result<AccordionState<S>> {
    if len == 0 {
        return Err(Error::out_of_range("accordion length", 0, ">= 1"));
    }
    Ok(AccordionTable::new(params, len).state(len))
}

fn check_sum(n: usize, k: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::out_of_range("n", 0, ">= 1"));
    }
    if k > 2 * n - 2 {
        return Err(Error::out_of_range("k", k, format!("0..={}", 2 * n - 2)));
    }
    Ok(())
}

/// `P(k ∉ A+B)` for `k` in `[0, 2n-2]`.
pub fn miss_single_correlated<S: Scalar>(n: usize, k: usize, params: &CorrelatedParams<S>) -> Result<S> {
    check_sum(n, k)?;
    let k = if k > n - 1 { 2 * n - 2 - k } else { k } as u64;
    let x2 = AccordionTable::new(params, 2).x(2).clone();
    Ok(if k % 2 == 1 {
        x2.powu(k.div_ceil(2))
    } else {
        (S::one() - params.p().clone() * params.p1().clone()) * x2.powu(k / 2)
    })
}

/// Product of accordion factors over a decomposition.
pub fn accordion_decomposition_prob<S: Scalar>(d: &AccordionDecomposition, params: &CorrelatedParams<S>) -> S {
    let d = &d.0;
    let longest = d.plain().keys().chain(d.looped().keys()).copied().max().unwrap_or(0);
    let table = AccordionTable::new(params, longest);
    let mut acc = S::one();
    for (&len, &m) in d.plain() {
        acc = acc * table.x(len).powu(m as u64);
    }
    for (&len, &m) in d.looped() {
        acc = acc * table.looped(len).powu(m as u64);
    }
    acc
}

/// `P(i, j ∉ A+B)` for `i < j`. Accordion product when both sums sit on
/// one side of `n-1`, a four-state transfer along each component otherwise.
pub fn miss_pair_correlated<S: Scalar>(n: usize, i: usize, j: usize, params: &CorrelatedParams<S>) -> Result<S> {
    check_sum(n, i)?;
    check_sum(n, j)?;
    if i >= j {
        return Err(Error::InvalidArgument(format!("need i < j, got ({i}, {j})")));
    }
    if j < n {
        return Ok(accordion_decomposition_prob(&decompose_correlated(n, &[i, j])?, params));
    }
    if i >= n - 1 {
        let d = decompose_correlated(n, &[2 * n - 2 - j, 2 * n - 2 - i])?;
        return Ok(accordion_decomposition_prob(&d, params));
    }
    correlated_graph_prob(&ConditionGraph::build(n, &[i, j])?, params)
}

// State `s` encodes `(s >> 1 & 1, s & 1)` as (in A, in B).
fn compatible(u: usize, v: usize) -> bool {
    let (ua, ub, va, vb) = (u >> 1 & 1, u & 1, v >> 1 & 1, v & 1);
    ua & vb == 0 && ub & va == 0
}

/// Probability that no edge of `graph` joins a chosen `A`-copy to a chosen
/// `B`-copy, loops forbidding an index in both.
pub fn correlated_graph_prob<S: Scalar>(graph: &ConditionGraph, params: &CorrelatedParams<S>) -> Result<S> {
    let [pp1, pq1, qp2, qq2] = params.joint();
    let weight = [qq2, qp2, pq1, pp1];
    let allowed = |s: usize, looped: bool| !(looped && s == 3);
    let mut total = S::one();
    for comp in graph.components()? {
        let run = |first: usize| -> S {
            let mut dp = [S::zero(), S::zero(), S::zero(), S::zero()];
            if !allowed(first, comp.looped[0]) {
                return S::zero();
            }
            dp[first] = weight[first].clone();
            for &l in &comp.looped[1..] {
                let mut next = [S::zero(), S::zero(), S::zero(), S::zero()];
                for (v, slot) in next.iter_mut().enumerate() {
                    if !allowed(v, l) {
                        continue;
                    }
                    let into = (0..4).filter(|&u| compatible(u, v)).map(|u| dp[u].clone());
                    *slot = S::sum_all(into.collect::<Vec<_>>()) * weight[v].clone();
                }
                dp = next;
            }
            let closing = (0..4).filter(|&u| !comp.cycle || compatible(u, first));
            S::sum_all(closing.map(|u| dp[u].clone()).collect::<Vec<_>>())
        };
        total = total * S::sum_all((0..4).map(run).collect::<Vec<_>>());
    }
    Ok(total)
}

/// The matrix advancing `(x_m, y_m, z_m, x_{m-1})` by one step.
pub fn governing_matrix<S: Scalar>(params: &CorrelatedParams<S>) -> [[f64; 4]; 4] {
    let [pp1, pq1, qp2, qq2] = params.joint().map(|v| v.to_f64());
    [
        [qq2, qp2, pq1, pp1 * qq2],
        [qq2, qp2, 0.0, 0.0],
        [qq2, 0.0, pq1, 0.0],
        [1.0, 0.0, 0.0, 0.0],
    ]
}

fn mat_mul(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut out = [[0.0; 4]; 4];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = (0..4).map(|k| a[r][k] * b[k][c]).sum();
        }
    }
    out
}

/// Spectral radius of the governing matrix by power iteration on
/// `M + tI`, with the iterates taken by repeated squaring.
pub fn growth_rate<S: Scalar>(params: &CorrelatedParams<S>) -> f64 {
    let m = governing_matrix(params);
    let shift = m.iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max);
    let mut b = m;
    for (k, row) in b.iter_mut().enumerate() {
        row[k] += shift;
    }
    for _ in 0..64 {
        b = mat_mul(&b, &b);
        let scale = b.iter().flatten().fold(0.0, |acc: f64, &v| acc.max(v));
        b.iter_mut().flatten().for_each(|v| *v /= scale);
    }
    let v: Vec<f64> = (0..4).map(|r| b[r].iter().sum()).collect();
    let mv: Vec<f64> = (0..4).map(|r| (0..4).map(|c| m[r][c] * v[c]).sum()).collect();
    mv.iter().sum::<f64>() / v.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::misschance::{miss_pair, miss_single, path_prob};
    use crate::model::{ratio, ModelParams};
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn cp(p: f64, p1: f64, p2: f64) -> CorrelatedParams<f64> {
        CorrelatedParams::new(p, p1, p2).unwrap()
    }

    fn exact(p: (i64, i64), p1: (i64, i64), p2: (i64, i64)) -> CorrelatedParams<BigRational> {
        CorrelatedParams::new(ratio(p.0, p.1), ratio(p1.0, p1.1), ratio(p2.0, p2.1)).unwrap()
    }

    #[test]
    fn initial_values() {
        let c = exact((1, 3), (3, 4), (1, 5));
        let (p, p1, p2) = (c.p().clone(), c.p1().clone(), c.p2().clone());
        let (q, q1, q2) = (c.q().clone(), c.q1().clone(), c.q2().clone());
        let x2 = q.clone() * (q2.clone() + p2.clone() * q.clone())
            + p.clone() * (q1.clone() * q.clone() * q2.clone() + q1.clone() * q1.clone() * p.clone() + p1 * q.clone() * q2.clone());
        let s = accordion_probs(2, &c).unwrap();
        assert_eq!(s.x, x2);
        assert_eq!(s.y, q.clone() * (ratio(1, 1) - p.clone() * p2));
        assert_eq!(s.z, p.clone() * q1.clone() * (q.clone() * q2.clone() + p * q1) + q * q2);
        assert_eq!(accordion_probs(1, &c).unwrap(), AccordionState { x: ratio(1, 1), y: ratio(1, 1), z: ratio(1, 1) });
        assert!(accordion_probs(0, &c).is_err());
    }

    #[test]
    fn independent_copy_example() {
        let c = exact((1, 2), (1, 2), (1, 2));
        assert_eq!(accordion_probs(2, &c).unwrap().x, ratio(9, 16));
        assert_eq!(miss_single_correlated(5, 1, &c).unwrap(), ratio(9, 16));
        assert_eq!(miss_single_correlated(5, 0, &c).unwrap(), ratio(3, 4));
        let f = cp(0.3, 0.3, 0.3);
        assert!((accordion_probs(2, &f).unwrap().x - (1.0 - 0.09f64).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn specialises_to_sumset() {
        for (num, den) in [(1, 3), (1, 2), (3, 4)] {
            let c = exact((num, den), (1, 1), (0, 1));
            let m = ModelParams::new(ratio(num, den)).unwrap();
            let t = AccordionTable::new(&c, 40);
            for len in 0..=40 {
                assert_eq!(t.x(len), &path_prob(len, &m));
            }
            for n in 1..=10 {
                for i in 0..2 * n - 1 {
                    assert_eq!(miss_single_correlated(n, i, &c).unwrap(), miss_single(n, i, &m).unwrap());
                    for j in i + 1..2 * n - 1 {
                        assert_eq!(miss_pair_correlated(n, i, j, &c).unwrap(), miss_pair(n, i, j, &m).unwrap());
                    }
                }
            }
        }
        let c = exact((1, 2), (1, 1), (0, 1));
        assert_eq!(miss_pair_correlated(6, 0, 2, &c).unwrap(), ratio(1, 4));
    }

    #[test]
    fn matches_joint_enumeration() {
        let census: Vec<_> = (1..=6).map(|n| crate::oracle::CorrelatedCensus::new(n).unwrap()).collect();
        let grid = [(1, 4), (1, 2), (3, 4)];
        for p in grid {
            for p1 in grid {
                for p2 in grid {
                    let c = exact(p, p1, p2);
                    for (n, oracle) in (1..=6).zip(&census) {
                        for i in 0..2 * n - 1 {
                            assert_eq!(miss_single_correlated(n, i, &c).unwrap(), oracle.miss(&[i], &c).unwrap());
                            for j in i + 1..2 * n - 1 {
                                let got = miss_pair_correlated(n, i, j, &c).unwrap();
                                assert_eq!(got, oracle.miss(&[i, j], &c).unwrap(), "n={n} i={i} j={j}");
                            }
                        }
                    }
                }
            }
        }
    }

    /// Accordion of length `len` by listing all `4^len` states; `looped`
    /// forbids the last index in both sets.
    fn brute_accordion(len: usize, looped: bool, params: &CorrelatedParams<BigRational>) -> BigRational {
        let w = params.joint();
        let mut total = ratio(0, 1);
        for code in 0..4usize.pow(len as u32) {
            let s: Vec<usize> = (0..len).map(|k| code / 4usize.pow(k as u32) % 4).collect();
            // joint() order is 11, 10, 01, 00
            let (a, b) = (|s: usize| s <= 1, |s: usize| s == 0 || s == 2);
            let clash = s.windows(2).any(|p| (a(p[0]) && b(p[1])) || (b(p[0]) && a(p[1])));
            if clash || (looped && s[len - 1] == 0) {
                continue;
            }
            total += s.iter().fold(ratio(1, 1), |acc, &k| acc * w[k].clone());
        }
        total
    }

    #[test]
    fn accordion_matches_enumeration() {
        let c = exact((2, 5), (1, 3), (3, 4));
        let t = AccordionTable::new(&c, 7);
        for len in 1..=7 {
            assert_eq!(t.x(len), &brute_accordion(len, false, &c));
            assert_eq!(t.looped(len), brute_accordion(len, true, &c));
        }
    }

    #[test]
    fn pair_needs_order() {
        let c = cp(0.5, 0.5, 0.5);
        assert!(miss_pair_correlated(5, 3, 3, &c).is_err());
        assert!(miss_pair_correlated(5, 4, 2, &c).is_err());
        assert!(miss_pair_correlated(5, 2, 9, &c).is_err());
        assert!(miss_single_correlated(5, 9, &c).is_err());
    }

    #[test]
    fn growth_rate_examples() {
        let g = growth_rate(&cp(0.5, 1.0, 0.0));
        assert!((g - (0.5 + 1.25f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((growth_rate(&cp(1e-9, 0.3, 0.6)) - 1.0).abs() < 1e-6);
        // reducible: p2 = 1 leaves the eigenvalues q and p q1
        let g = growth_rate(&cp(0.3, 0.2, 1.0));
        assert!((g - 0.7).abs() < 1e-12);
    }

    #[test]
    fn ratio_converges_to_growth_rate() {
        let grid = [0.25, 0.5, 0.75];
        for p in grid {
            for p1 in grid {
                for p2 in grid {
                    let c = cp(p, p1, p2);
                    let t = AccordionTable::new(&c, 60);
                    let ratio = t.x(60) / t.x(59);
                    assert!((ratio - growth_rate(&c)).abs() <= 1e-8, "{p} {p1} {p2}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn accordion_bounds(p in 0.01f64..0.99, p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0) {
            let c = cp(p, p1, p2);
            let t = AccordionTable::new(&c, 200);
            for m in 1..=200 {
                let s = t.state(m);
                prop_assert!(s.y >= 0.0 && s.z >= 0.0);
                prop_assert!(s.y <= s.x + 1e-15 && s.z <= s.x + 1e-15 && s.x <= 1.0 + 1e-15);
                prop_assert!(*t.x(m) <= t.x(m - 1) + 1e-15);
            }
        }

        #[test]
        fn single_is_probability(n in 1usize..50, k in 0usize..200, p in 0.01f64..0.99, p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0) {
            let k = k % (2 * n - 1);
            let v = miss_single_correlated(n, k, &cp(p, p1, p2)).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v, miss_single_correlated(n, 2 * n - 2 - k, &cp(p, p1, p2)).unwrap());
        }
    }
}
