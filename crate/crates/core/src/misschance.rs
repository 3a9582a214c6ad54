//! Probabilities that prescribed sums are absent from `A+A`.

use crate::error::{Error, Result};
use crate::graphs::{decompose_pair, ConditionGraph, PathDecomposition};
use crate::model::{ModelParams, Scalar};

/// The recurrence `a_m` for the probability that a random subset is an
/// independent set of the path on `m` vertices. `a_0 = a_1 = 1`.
#[derive(Debug, Clone)]
pub struct PathProbTable<S> {
    p: S,
    q: S,
    a: Vec<S>,
}

impl<S: Scalar> PathProbTable<S> {
    pub fn new(params: &ModelParams<S>, max_len: usize) -> Self {
        let mut t = PathProbTable {
            p: params.p().clone(),
            q: params.q().clone(),
            a: vec![S::one(), S::one()],
        };
        t.extend_to(max_len);
        t
    }

    pub fn extend_to(&mut self, len: usize) {
        let pq = self.p.clone() * self.q.clone();
        while self.a.len() <= len {
            let m = self.a.len();
            let next = self.q.clone() * self.a[m - 1].clone() + pq.clone() * self.a[m - 2].clone();
            self.a.push(next);
        }
    }

    pub fn max_len(&self) -> usize {
        self.a.len() - 1
    }

    /// `a_len`; panics past the table's length.
    pub fn get(&self, len: usize) -> &S {
        &self.a[len]
    }

    /// A path on `len` vertices with a loop at one end.
    pub fn looped(&self, len: usize) -> S {
        assert!(len >= 1, "a looped path has at least one vertex");
        self.q.clone() * self.a[len - 1].clone()
    }
}

pub fn path_prob<S: Scalar>(len: usize, params: &ModelParams<S>) -> S {
    PathProbTable::new(params, len).get(len).clone()
}

/// `sqrt(1 + 2p - 3p^2)`, the discriminant root of the path recurrence.
pub fn growth_root(p: f64) -> f64 {
    (1.0 + 2.0 * p - 3.0 * p * p).sqrt()
}

/// Closed form of the path recurrence.
pub fn path_prob_closed(len: usize, p: f64) -> f64 {
    let g = growth_root(p);
    let n = len as i32;
    ((g - 1.0 - p) * (1.0 - p - g).powi(n) + (g + 1.0 + p) * (1.0 - p + g).powi(n))
        / (2f64.powi(n + 1) * g)
}

pub fn looped_path_prob<S: Scalar>(len: usize, params: &ModelParams<S>) -> Result<S> {
    if len == 0 {
        return Err(Error::out_of_range("looped path length", 0, ">= 1"));
    }
    Ok(params.q().clone() * path_prob(len - 1, params))
}

fn check_sum(n: usize, i: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::out_of_range("n", 0, ">= 1"));
    }
    if i > 2 * n - 2 {
        return Err(Error::out_of_range("i", i, format!("0..={}", 2 * n - 2)));
    }
    Ok(())
}

/// `P(i ∉ A+A)` for `i` in `[0, 2n-2]`.
pub fn miss_single<S: Scalar>(n: usize, i: usize, params: &ModelParams<S>) -> Result<S> {
    check_sum(n, i)?;
    let i = if i > n - 1 { 2 * n - 2 - i } else { i } as u64;
    let q = params.q().clone();
    let a2 = S::one() - params.p().clone() * params.p().clone();
    Ok(if i % 2 == 1 {
        a2.powu(i.div_ceil(2))
    } else {
        q * a2.powu(i / 2)
    })
}

/// A model where `A ∩ [0, l-1] = lower` and `A ∩ [n-u, n-1] = upper` are
/// fixed, and the middle is random.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FringedSetup {
    pub n: usize,
    pub l: usize,
    pub u: usize,
    pub lower: Vec<usize>,
    pub upper: Vec<usize>,
}

impl FringedSetup {
    pub fn new(n: usize, l: usize, u: usize, lower: &[usize], upper: &[usize]) -> Result<Self> {
        if l + u > n {
            return Err(Error::InvalidArgument(format!("fringes l={l}, u={u} overlap in n={n}")));
        }
        if let Some(&x) = lower.iter().find(|&&x| x >= l) {
            return Err(Error::out_of_range("lower fringe element", x, format!("0..{l}")));
        }
        if let Some(&x) = upper.iter().find(|&&x| x < n - u || x >= n) {
            return Err(Error::out_of_range("upper fringe element", x, format!("{}..{n}", n - u)));
        }
        let mut lower = lower.to_vec();
        let mut upper = upper.to_vec();
        lower.sort_unstable();
        lower.dedup();
        upper.sort_unstable();
        upper.dedup();
        Ok(FringedSetup { n, l, u, lower, upper })
    }
}

/// `P(i ∉ A+A)` under fixed fringes, for `i` in `[2l-1, n-u-1]` or
/// `[n+l-1, 2n-2u-1]`.
pub fn miss_single_fringed<S: Scalar>(setup: &FringedSetup, i: usize, params: &ModelParams<S>) -> Result<S> {
    let FringedSetup { n, l, u, .. } = *setup;
    let q = params.q().clone();
    let a2 = S::one() - params.p().clone() * params.p().clone();
    let in_low = i + 1 >= 2 * l && i + u < n;
    let in_high = i + 1 >= n + l && i + 2 * u < 2 * n;
    let (fixed, base) = if in_low {
        let half = if i % 2 == 1 { i.div_ceil(2) } else { i / 2 };
        (setup.lower.len(), half - l)
    } else if in_high {
        let half = if i % 2 == 1 { n - i.div_ceil(2) } else { n - 1 - i / 2 };
        (setup.upper.len(), half - u)
    } else {
        return Err(Error::out_of_range(
            "i",
            i,
            format!("[{}, {}] or [{}, {}]", (2 * l).saturating_sub(1), n as i64 - u as i64 - 1, n + l - 1, 2 * n as i64 - 2 * u as i64 - 1),
        ));
    };
    let centre = if i.is_multiple_of(2) { 1 } else { 0 };
    Ok(q.powu((fixed + centre) as u64) * a2.powu(base as u64))
}

/// Product of path factors over a decomposition.
pub fn decomposition_prob<S: Scalar>(d: &PathDecomposition, params: &ModelParams<S>) -> S {
    let longest = d.plain().keys().chain(d.looped().keys()).copied().max().unwrap_or(0);
    let table = PathProbTable::new(params, longest);
    let mut acc = S::one();
    for (&len, &m) in d.plain() {
        acc = acc * table.get(len).powu(m as u64);
    }
    for (&len, &m) in d.looped() {
        acc = acc * table.looped(len).powu(m as u64);
    }
    acc
}

/// `P(i, j ∉ A+A)`. Closed form when both sums sit on one side of `n-1`,
/// component dynamic programming otherwise.
pub fn miss_pair<S: Scalar>(n: usize, i: usize, j: usize, params: &ModelParams<S>) -> Result<S> {
    check_sum(n, i)?;
    check_sum(n, j)?;
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    if i == j {
        return miss_single(n, i, params);
    }
    if j < n {
        return Ok(decomposition_prob(&decompose_pair(n, i, j)?, params));
    }
    if i >= n - 1 {
        let (ri, rj) = (2 * n - 2 - j, 2 * n - 2 - i);
        return Ok(decomposition_prob(&decompose_pair(n, ri, rj)?, params));
    }
    graph_independent_prob(&ConditionGraph::build(n, &[i, j])?, params)
}

/// Probability that `A` is an independent set of `graph`: a transfer
/// recurrence along each path or cycle, loops allowed anywhere.
pub fn graph_independent_prob<S: Scalar>(graph: &ConditionGraph, params: &ModelParams<S>) -> Result<S> {
    let (p, q) = (params.p().clone(), params.q().clone());
    let mut total = S::one();
    for comp in graph.components()? {
        let walk = |first_in: bool| -> (S, S) {
            let mut ex = if first_in { S::zero() } else { q.clone() };
            let mut inc = if first_in && !comp.looped[0] { p.clone() } else { S::zero() };
            for &l in &comp.looped[1..] {
                let both = ex.clone() + inc;
                inc = if l { S::zero() } else { ex * p.clone() };
                ex = both * q.clone();
            }
            (ex, inc)
        };
        let prob = if comp.cycle {
            let (ex0, in0) = walk(false);
            let (ex1, _) = walk(true);
            ex0 + in0 + ex1
        } else {
            let (ex, inc) = walk(false);
            let (ex1, in1) = walk(true);
            ex + inc + ex1 + in1
        };
        total = total * prob;
    }
    Ok(total)
}

/// Float-only `((g+1+p)/(2g))^((j-i)/2) ((1-p+g)/2)^(j+1)`, an upper bound on
/// `P(i, j ∉ A+A)` when `i < j` are both odd.
pub fn pair_miss_upper_bound(i: usize, j: usize, p: f64) -> Result<f64> {
    if i >= j {
        return Err(Error::InvalidArgument(format!("need i < j, got ({i}, {j})")));
    }
    let g = growth_root(p);
    Ok(((g + 1.0 + p) / (2.0 * g)).powi(((j - i) / 2) as i32) * ((1.0 - p + g) / 2.0).powi(j as i32 + 1))
}

/// Lower bound on the probability that every middle sum is present.
pub fn bulk_fill_lower_bound<S: Scalar>(lower_size: usize, upper_size: usize, params: &ModelParams<S>) -> S {
    let (p, q) = (params.p().clone(), params.q().clone());
    let coef = (S::one() + q.clone()) / (p.clone() * p);
    S::one() - coef * (q.powu(lower_size as u64) + q.powu(upper_size as u64))
}

/// Upper bound on the probability that a sum between the fringe windows
/// and the middle is missing. Odd `l` needs a real exponent, so it is float only.
pub fn event_c_upper_bound<S: Scalar>(l: usize, params: &ModelParams<S>) -> Result<S> {
    let q = params.q().clone();
    let two = S::from_u64(2);
    let three = S::from_u64(3);
    let a2 = two.clone() * q.clone() - q.clone() * q.clone();
    let lead = two * (three * q.clone() - q.clone() * q.clone());
    let denom = (S::one() - q.clone()) * (S::one() - q);
    let power = if l.is_multiple_of(2) {
        a2.powu((l / 2) as u64)
    } else {
        S::from_float(a2.to_f64().powf(l as f64 / 2.0)).ok_or(Error::NotExact("an odd fringe width"))?
    };
    Ok(lead * power / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ratio;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn exact(num: i64, den: i64) -> ModelParams<BigRational> {
        ModelParams::new(ratio(num, den)).unwrap()
    }

    fn brute_independent(g: &ConditionGraph, p: &BigRational) -> BigRational {
        let n = g.n();
        let q = ratio(1, 1) - p.clone();
        let mut total = ratio(0, 1);
        for mask in 0u32..(1 << n) {
            let bad = g.edges().iter().any(|&(a, b)| mask >> a & 1 == 1 && mask >> b & 1 == 1);
            if !bad {
                let k = mask.count_ones() as u64;
                total += p.powu(k) * q.powu(n as u64 - k);
            }
        }
        total
    }

    #[test]
    fn path_values() {
        let m = exact(1, 2);
        assert_eq!(path_prob(1, &m), ratio(1, 1));
        assert_eq!(path_prob(2, &m), ratio(3, 4));
        assert_eq!(path_prob(3, &m), ratio(5, 8));
        assert_eq!(looped_path_prob(1, &m).unwrap(), ratio(1, 2));
        assert!(looped_path_prob(0, &m).is_err());
    }

    #[test]
    fn closed_form_tracks_recurrence() {
        for &p in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            let m = ModelParams::new(p).unwrap();
            let t = PathProbTable::new(&m, 60);
            for len in 1..=60 {
                let (a, b) = (*t.get(len), path_prob_closed(len, p));
                assert!((a - b).abs() <= 1e-12 * a.max(1e-300), "p={p} len={len} {a} {b}");
            }
        }
    }

    #[test]
    fn single_miss_examples() {
        let m = exact(1, 2);
        assert_eq!(miss_single(4, 2, &m).unwrap(), ratio(3, 8));
        assert_eq!(miss_single(4, 3, &m).unwrap(), ratio(9, 16));
        assert_eq!(miss_single(4, 0, &m).unwrap(), ratio(1, 2));
        assert_eq!(miss_single(4, 6, &m).unwrap(), ratio(1, 2));
        assert!(miss_single(4, 7, &m).is_err());
    }

    #[test]
    fn pair_example() {
        let m = exact(1, 2);
        assert_eq!(miss_pair(4, 1, 3, &m).unwrap(), ratio(1, 2));
        assert_eq!(miss_pair(4, 0, 2, &m).unwrap(), ratio(1, 4));
        let g = ConditionGraph::build(21, &[6, 15]).unwrap();
        assert_eq!(graph_independent_prob(&g, &m).unwrap(), miss_pair(21, 6, 15, &m).unwrap());
        let g = ConditionGraph::build(2, &[1]).unwrap();
        assert_eq!(graph_independent_prob(&g, &m).unwrap(), ratio(3, 4));
        let g = ConditionGraph::build(5, &[]).unwrap();
        assert_eq!(graph_independent_prob(&g, &m).unwrap(), ratio(1, 1));
    }

    #[test]
    fn fringed_examples() {
        let m = exact(1, 2);
        let s = FringedSetup::new(10, 0, 2, &[], &[8, 9]).unwrap();
        assert_eq!(miss_single_fringed(&s, 15, &m).unwrap(), ratio(1, 4));
        let s = FringedSetup::new(10, 2, 0, &[0, 1], &[]).unwrap();
        assert_eq!(miss_single_fringed(&s, 4, &m).unwrap(), ratio(1, 8));
        assert!(miss_single_fringed(&s, 1, &m).is_err());
    }

    #[test]
    fn fringed_matches_enumeration() {
        let p = ratio(2, 5);
        let m = ModelParams::new(p.clone()).unwrap();
        let q = ratio(3, 5);
        let (n, l, u) = (9, 2, 2);
        for lmask in 0u32..4 {
            for umask in 0u32..4 {
                let lower: Vec<usize> = (0..l).filter(|b| lmask >> b & 1 == 1).collect();
                let upper: Vec<usize> = (0..u).filter(|b| umask >> b & 1 == 1).map(|b| n - u + b).collect();
                let setup = FringedSetup::new(n, l, u, &lower, &upper).unwrap();
                for i in 0..=2 * n - 2 {
                    let Ok(v) = miss_single_fringed(&setup, i, &m) else { continue };
                    let mut total = ratio(0, 1);
                    for mid in 0u32..(1 << (n - l - u)) {
                        let mut a: Vec<usize> = lower.clone();
                        a.extend((0..n - l - u).filter(|b| mid >> b & 1 == 1).map(|b| b + l));
                        a.extend(upper.iter().copied());
                        let hit = a.iter().any(|&x| a.iter().any(|&y| x + y == i));
                        if !hit {
                            let k = mid.count_ones() as u64;
                            total += p.powu(k) * q.powu((n - l - u) as u64 - k);
                        }
                    }
                    assert_eq!(v, total, "L={lower:?} U={upper:?} i={i}");
                }
            }
        }
    }

    #[test]
    fn graph_dp_matches_brute_force() {
        let p = ratio(1, 3);
        let m = ModelParams::new(p.clone()).unwrap();
        for n in 1..=9 {
            for i in 0..=2 * n - 2 {
                for j in i..=2 * n - 2 {
                    let g = ConditionGraph::build(n, &[i, j]).unwrap();
                    assert_eq!(graph_independent_prob(&g, &m).unwrap(), brute_independent(&g, &p));
                }
            }
        }
    }

    #[test]
    fn dp_handles_cycles() {
        let p = ratio(1, 3);
        let m = ModelParams::new(p.clone()).unwrap();
        let mut found = false;
        for n in 3..=8 {
            for a in 0..=2 * n - 2 {
                for b in a + 1..=2 * n - 2 {
                    for c in b + 1..=2 * n - 2 {
                        let g = ConditionGraph::build(n, &[a, b, c]).unwrap();
                        let Ok(comps) = g.components() else { continue };
                        if comps.iter().any(|c| c.cycle) {
                            found = true;
                            assert_eq!(graph_independent_prob(&g, &m).unwrap(), brute_independent(&g, &p));
                        }
                    }
                }
            }
        }
        assert!(found);
    }

    #[test]
    fn closed_pair_matches_graph_route() {
        let m = exact(2, 3);
        for n in 2..=20 {
            for j in 1..=2 * n - 2 {
                for i in 0..j {
                    let g = ConditionGraph::build(n, &[i, j]).unwrap();
                    assert_eq!(miss_pair(n, i, j, &m).unwrap(), graph_independent_prob(&g, &m).unwrap());
                }
            }
        }
    }

    #[test]
    fn pair_upper_bound_dominates() {
        for &p in &[0.2, 0.5, 0.8] {
            let m = ModelParams::new(p).unwrap();
            for j in (3..=39).step_by(2) {
                for i in (1..j).step_by(2) {
                    let v = miss_pair(40, i, j, &m).unwrap();
                    assert!(v <= pair_miss_upper_bound(i, j, p).unwrap() * (1.0 + 1e-12));
                }
            }
        }
        assert!(pair_miss_upper_bound(5, 5, 0.5).is_err());
        assert!(pair_miss_upper_bound(1, 3, 0.5).unwrap() >= 0.5);
        assert!(pair_miss_upper_bound(1, 3, 0.999999).unwrap() < 1e-5);
    }

    #[test]
    fn bound_examples() {
        assert_eq!(bulk_fill_lower_bound(0, 0, &exact(1, 2)), ratio(-11, 1));
        assert_eq!(event_c_upper_bound(0, &exact(1, 2)).unwrap(), ratio(10, 1));
        assert!(event_c_upper_bound(3, &exact(1, 2)).is_err());
        let m = ModelParams::new(0.5).unwrap();
        let v = event_c_upper_bound(3, &m).unwrap();
        assert!((v - 10.0 * 0.75f64.powf(1.5)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn single_miss_is_a_probability(n in 1usize..200, x in 0usize..1000, p in 0.01f64..0.99) {
            let i = x % (2 * n - 1);
            let m = ModelParams::new(p).unwrap();
            let v = miss_single(n, i, &m).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!((v - miss_single(n, 2 * n - 2 - i, &m).unwrap()).abs() < 1e-15);
        }

        #[test]
        fn pair_miss_below_singles(n in 2usize..120, x in 0usize..1000, y in 0usize..1000, p in 0.01f64..0.99) {
            let i = x % (2 * n - 1);
            let j = y % (2 * n - 1);
            let m = ModelParams::new(p).unwrap();
            let v = miss_pair(n, i, j, &m).unwrap();
            let si = miss_single(n, i, &m).unwrap();
            let sj = miss_single(n, j, &m).unwrap();
            prop_assert!(v <= si.min(sj) * (1.0 + 1e-12));
            prop_assert!(v >= 0.0);
        }

        #[test]
        fn path_probs_decrease(len in 1usize..100, p in 0.01f64..0.99) {
            let m = ModelParams::new(p).unwrap();
            let t = PathProbTable::new(&m, len + 1);
            prop_assert!(t.get(len + 1) <= t.get(len));
        }
    }
}
