//! Mean and variance of `|A+A|` by conditioning on `|A| = r`.
//!
//! Given `|A| = r`, `A` is uniform over `r`-subsets, so a set of sums is
//! missed with probability (independent `r`-sets of the condition graph) /
//! `C(n, r)`. Everything here counts those independent sets.

use std::ops::{Add, Mul};

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graphs::{decompose_pair, decompose_single, ConditionGraph, PathDecomposition};
use crate::model::{ModelParams, Scalar};

/// Float mode keeps binomials below `f64::MAX`.
pub const FLOAT_MAX_N: usize = 1000;

pub trait Semiring: Clone + Zero + One + Add<Output = Self> + Mul<Output = Self> + Send + Sync {}
impl<T: Clone + Zero + One + Add<Output = T> + Mul<Output = T> + Send + Sync> Semiring for T {}

/// Pascal's triangle up to a fixed row.
#[derive(Debug, Clone)]
pub struct BinomTable<T> {
    rows: Vec<Vec<T>>,
}

impl<T: Semiring> BinomTable<T> {
    pub fn new(max_n: usize) -> Self {
        let mut rows: Vec<Vec<T>> = Vec::with_capacity(max_n + 1);
        rows.push(vec![T::one()]);
        for n in 1..=max_n {
            let prev = &rows[n - 1];
            let mut row = Vec::with_capacity(n + 1);
            row.push(T::one());
            for k in 1..n {
                row.push(prev[k - 1].clone() + prev[k].clone());
            }
            row.push(T::one());
            rows.push(row);
        }
        BinomTable { rows }
    }

    /// `C(n, k)`, zero outside `0 <= k <= n`.
    pub fn get(&self, n: i64, k: i64) -> T {
        if n < 0 || k < 0 || k > n {
            return T::zero();
        }
        self.rows[n as usize][k as usize].clone()
    }

    pub fn row(&self, n: usize) -> &[T] {
        &self.rows[n]
    }
}

/// Coefficient `r` counts the independent sets with `r` vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct CountPolynomial<T> {
    coeffs: Vec<T>,
}

impl<T: Semiring> CountPolynomial<T> {
    pub fn one() -> Self {
        CountPolynomial { coeffs: vec![T::one()] }
    }

    pub fn from_coeffs(coeffs: Vec<T>) -> Self {
        CountPolynomial { coeffs }
    }

    pub fn coeff(&self, r: usize) -> T {
        self.coeffs.get(r).cloned().unwrap_or_else(T::zero)
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn mul(&self, other: &[T]) -> Self {
        let mut out = vec![T::zero(); self.coeffs.len() + other.len() - 1];
        for (a, x) in self.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (b, y) in other.iter().enumerate() {
                out[a + b] = out[a + b].clone() + x.clone() * y.clone();
            }
        }
        CountPolynomial { coeffs: out }
    }

    pub fn pow_mul(mut self, factor: &[T], times: usize) -> Self {
        for _ in 0..times {
            self = self.mul(factor);
        }
        self
    }
}

/// Independent `r`-sets of the path on `len` vertices: `C(len - r + 1, r)`.
pub fn independent_sets_on_path(r: usize, len: usize) -> BigUint {
    if r > len + 1 {
        return BigUint::zero();
    }
    let binom = BinomTable::<BigUint>::new(len + 1);
    binom.get(len as i64 - r as i64 + 1, r as i64)
}

fn path_poly<T: Semiring>(len: usize, binom: &BinomTable<T>) -> Vec<T> {
    (0..=len.div_ceil(2))
        .map(|r| binom.get(len as i64 - r as i64 + 1, r as i64))
        .collect()
}

fn decomposition_poly<T: Semiring>(d: &PathDecomposition, binom: &BinomTable<T>) -> CountPolynomial<T> {
    let mut poly = CountPolynomial::from_coeffs(binom.row(d.isolated()).to_vec());
    for (&len, &m) in d.plain() {
        poly = poly.pow_mul(&path_poly(len, binom), m);
    }
    for (&len, &m) in d.looped() {
        poly = poly.pow_mul(&path_poly(len - 1, binom), m);
    }
    poly
}

pub fn count_polynomial(d: &PathDecomposition) -> CountPolynomial<BigUint> {
    decomposition_poly(d, &BinomTable::new(d.vertex_count() + 1))
}

/// Count polynomial of an arbitrary condition graph by a transfer recurrence.
pub fn graph_count_polynomial<T: Semiring>(graph: &ConditionGraph) -> Result<CountPolynomial<T>> {
    let mut total = CountPolynomial::one();
    for comp in graph.components()? {
        let walk = |first_in: bool| -> (Vec<T>, Vec<T>) {
            let mut ex = if first_in { vec![T::zero()] } else { vec![T::one()] };
            let mut inc = if first_in && !comp.looped[0] {
                vec![T::zero(), T::one()]
            } else {
                vec![T::zero()]
            };
            for &l in &comp.looped[1..] {
                let both = add_polys(&ex, &inc);
                inc = if l {
                    vec![T::zero()]
                } else {
                    std::iter::once(T::zero()).chain(ex.iter().cloned()).collect()
                };
                ex = both;
            }
            (ex, inc)
        };
        let (ex0, in0) = walk(false);
        let (ex1, in1) = walk(true);
        let mut poly = add_polys(&add_polys(&ex0, &in0), &ex1);
        if !comp.cycle {
            poly = add_polys(&poly, &in1);
        }
        total = total.mul(&poly);
    }
    Ok(total)
}

fn add_polys<T: Semiring>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.len().max(b.len())];
    for (k, x) in a.iter().enumerate() {
        out[k] = out[k].clone() + x.clone();
    }
    for (k, x) in b.iter().enumerate() {
        out[k] = out[k].clone() + x.clone();
    }
    out
}

fn check_n<S: Scalar>(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::out_of_range("n", 0, ">= 1"));
    }
    if S::MODE == crate::model::NumericMode::Float && n > FLOAT_MAX_N {
        return Err(Error::out_of_range("n", n, format!("<= {FLOAT_MAX_N} in float mode")));
    }
    Ok(())
}

fn check_sum(n: usize, i: usize) -> Result<()> {
    if i > 2 * n - 2 {
        return Err(Error::out_of_range("i", i, format!("0..={}", 2 * n - 2)));
    }
    Ok(())
}

/// Count polynomial of the single-sum condition graph:
/// `(1 + 2x)^ceil(i/2) (1 + x)^(n-i-1)` after reflecting `i` into `[0, n-1]`.
fn single_poly<T: Semiring>(n: usize, i: usize, binom: &BinomTable<T>) -> Vec<T> {
    let i = if i > n - 1 { 2 * n - 2 - i } else { i };
    let m = i.div_ceil(2);
    let two = T::one() + T::one();
    let mut pow2 = vec![T::one(); m + 1];
    for k in 1..=m {
        pow2[k] = pow2[k - 1].clone() * two.clone();
    }
    let edges: Vec<T> = binom.row(m).iter().zip(&pow2).map(|(c, w)| c.clone() * w.clone()).collect();
    CountPolynomial::from_coeffs(edges).mul(binom.row(n - i - 1)).coeffs
}

fn pair_poly<T: Semiring>(n: usize, i: usize, j: usize, binom: &BinomTable<T>) -> Result<Vec<T>> {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    if i == j {
        return Ok(single_poly(n, i, binom));
    }
    let d = if j < n {
        decompose_pair(n, i, j)?
    } else if i >= n - 1 {
        decompose_pair(n, 2 * n - 2 - j, 2 * n - 2 - i)?
    } else {
        return Ok(graph_count_polynomial(&ConditionGraph::build(n, &[i, j])?)?.coeffs);
    };
    Ok(decomposition_poly(&d, binom).coeffs)
}

/// `P(i ∉ A+A | |A| = r)`.
pub fn cond_miss_single<S: Scalar>(n: usize, i: usize, r: usize) -> Result<S> {
    check_n::<S>(n)?;
    check_sum(n, i)?;
    if r > n {
        return Err(Error::out_of_range("r", r, format!("0..={n}")));
    }
    let binom = BinomTable::<S>::new(n);
    let count = single_poly(n, i, &binom).get(r).cloned().unwrap_or_else(S::zero);
    Ok(count / binom.get(n as i64, r as i64))
}

/// `P(i, j ∉ A+A | |A| = r)`.
pub fn cond_miss_pair<S: Scalar>(n: usize, i: usize, j: usize, r: usize) -> Result<S> {
    check_n::<S>(n)?;
    check_sum(n, i)?;
    check_sum(n, j)?;
    if r > n {
        return Err(Error::out_of_range("r", r, format!("0..={n}")));
    }
    let binom = BinomTable::<S>::new(n + 1);
    let count = pair_poly(n, i, j, &binom)?.get(r).cloned().unwrap_or_else(S::zero);
    Ok(count / binom.get(n as i64, r as i64))
}

/// `[p^r q^(n-r)]` for `r = 0..=n`.
fn weights<S: Scalar>(n: usize, params: &ModelParams<S>) -> Vec<S> {
    let (p, q) = (params.p(), params.q());
    (0..=n).map(|r| p.powu(r as u64) * q.powu((n - r) as u64)).collect()
}

fn weighted<S: Scalar>(counts: &[S], w: &[S]) -> S {
    S::sum_all(counts.iter().zip(w).map(|(c, w)| c.clone() * w.clone()))
}

/// `E[2n - 1 - |A+A|]`.
pub fn expected_missing<S: Scalar>(n: usize, params: &ModelParams<S>) -> Result<S> {
    check_n::<S>(n)?;
    let binom = BinomTable::<S>::new(n);
    let two = S::from_u64(2);
    let mut totals = vec![S::zero(); n + 1];
    for i in 0..n {
        let factor = if i + 1 < n { two.clone() } else { S::one() };
        for (r, c) in single_poly(n, i, &binom).into_iter().enumerate() {
            totals[r] = totals[r].clone() + factor.clone() * c;
        }
    }
    Ok(weighted(&totals, &weights(n, params)))
}

/// `E|A+A|`.
pub fn expected_size<S: Scalar>(n: usize, params: &ModelParams<S>) -> Result<S> {
    Ok(S::from_u64(2 * n as u64 - 1) - expected_missing(n, params)?)
}

/// `Var|A+A|`, computed as the variance of the number of missing sums.
pub fn variance<S: Scalar>(n: usize, params: &ModelParams<S>) -> Result<S> {
    check_n::<S>(n)?;
    let binom = BinomTable::<S>::new(n + 1);
    let top = 2 * n - 2;
    let rows: Vec<Result<Vec<S>>> = (0..=top)
        .into_par_iter()
        .map(|i| {
            let mut acc = vec![S::zero(); n + 1];
            for j in i + 1..=top {
                if i + j > top {
                    break;
                }
                let mult = if i + j == top { 2 } else { 4 };
                let mult = S::from_u64(mult);
                for (r, c) in pair_poly(n, i, j, &binom)?.into_iter().enumerate() {
                    acc[r] = acc[r].clone() + mult.clone() * c;
                }
            }
            for (r, c) in single_poly(n, i, &binom).into_iter().enumerate() {
                acc[r] = acc[r].clone() + c;
            }
            Ok(acc)
        })
        .collect();
    let mut totals = vec![S::zero(); n + 1];
    for row in rows {
        for (r, c) in row?.into_iter().enumerate() {
            totals[r] = totals[r].clone() + c;
        }
    }
    let second = weighted(&totals, &weights(n, params));
    let mean = expected_missing(n, params)?;
    Ok(second - mean.clone() * mean)
}

/// Float upper bound on `E|A+A|`.
pub fn expected_upper_bound(n: usize, p: f64) -> f64 {
    let q = 1.0 - p;
    2.0 * n as f64 - 1.0 - 2.0 * q * (1.0 - q.powf((n as f64 - 1.0) / 2.0)) / (1.0 - q.sqrt())
}

/// Float lower bound on `E|A+A|`, valid for `p > 1/2`.
pub fn expected_lower_bound(n: usize, p: f64) -> Result<f64> {
    if p.is_nan() || p <= 0.5 || p >= 1.0 {
        return Err(Error::InvalidProbability {
            field: "p",
            range: "(1/2,1)",
            value: p.to_string(),
        });
    }
    let q = 1.0 - p;
    Ok(2.0 * n as f64 - 1.0 - 2.0 * q / (1.0 - (2.0 * q).sqrt()) - (2.0 * q).powf((n as f64 - 1.0) / 2.0))
}

/// Envelopes for `P(A+A misses a given set of k sums)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelopes {
    pub lower: f64,
    pub upper: f64,
    /// Whether `n` is large enough for the lower envelope to sit below the upper one.
    pub valid: bool,
}

pub fn mk_envelopes(n: usize, p: f64, k: usize) -> Envelopes {
    let q = 1.0 - p;
    let g = crate::misschance::growth_root(p);
    let threshold = 2.0 * k as f64 * q.ln() / (1.0 - p * p).ln();
    Envelopes {
        lower: q.powf(k as f64 / 2.0),
        upper: ((1.0 - p + g) / 2.0).powi(k as i32),
        valid: n as f64 > threshold,
    }
}

/// Count polynomial of the single-sum graph as exact integers.
pub fn single_count_polynomial(n: usize, i: usize) -> Result<CountPolynomial<BigUint>> {
    if n == 0 {
        return Err(Error::out_of_range("n", 0, ">= 1"));
    }
    check_sum(n, i)?;
    let d = decompose_single(n, i)?;
    Ok(count_polynomial(&d))
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

    /// Expected size straight from the definition.
    fn brute_moments(n: usize, p: &BigRational) -> (BigRational, BigRational) {
        let q = ratio(1, 1) - p.clone();
        let (mut e, mut e2) = (ratio(0, 1), ratio(0, 1));
        for mask in 0u32..(1 << n) {
            let mut sums = vec![false; 2 * n - 1];
            for a in 0..n {
                for b in 0..n {
                    if mask >> a & 1 == 1 && mask >> b & 1 == 1 {
                        sums[a + b] = true;
                    }
                }
            }
            let size = sums.iter().filter(|&&s| s).count() as i64;
            let k = mask.count_ones() as u64;
            let w = p.powu(k) * q.powu(n as u64 - k);
            e += w.clone() * ratio(size, 1);
            e2 += w * ratio(size * size, 1);
        }
        (e.clone(), e2 - e.clone() * e)
    }

    #[test]
    fn small_examples() {
        assert_eq!(expected_size(1, &exact(1, 2)).unwrap(), ratio(1, 2));
        assert_eq!(expected_size(2, &exact(1, 2)).unwrap(), ratio(5, 4));
        assert_eq!(variance(2, &exact(1, 2)).unwrap(), ratio(19, 16));
        assert_eq!(variance(1, &exact(1, 3)).unwrap(), ratio(2, 9));
    }

    #[test]
    fn conditional_examples() {
        assert_eq!(cond_miss_single::<BigRational>(4, 2, 0).unwrap(), ratio(1, 1));
        assert_eq!(cond_miss_single::<BigRational>(4, 0, 4).unwrap(), ratio(0, 1));
        assert_eq!(cond_miss_single::<BigRational>(4, 0, 0).unwrap(), ratio(1, 1));
        // odd i: the r-set avoids both ends of each of the (i+1)/2 edges
        assert_eq!(cond_miss_single::<BigRational>(4, 3, 2).unwrap(), ratio(4, 6));
    }

    #[test]
    fn path_counts() {
        assert_eq!(independent_sets_on_path(2, 4), BigUint::from(3u32));
        assert_eq!(independent_sets_on_path(0, 0), BigUint::from(1u32));
        assert_eq!(independent_sets_on_path(3, 4), BigUint::from(0u32));
        assert_eq!(independent_sets_on_path(3, 5), BigUint::from(1u32));
    }

    #[test]
    fn count_polynomial_examples() {
        let u = |v: &[u32]| v.iter().map(|&x| BigUint::from(x)).collect::<Vec<_>>();
        let mut d = PathDecomposition::new();
        d.add_plain(4, 1);
        assert_eq!(count_polynomial(&d).coeffs(), &u(&[1, 4, 3])[..]);
        let mut d = PathDecomposition::new();
        d.add_isolated(3);
        assert_eq!(count_polynomial(&d).coeffs(), &u(&[1, 3, 3, 1])[..]);
        let mut d = PathDecomposition::new();
        d.add_plain(2, 2);
        assert_eq!(count_polynomial(&d).coeffs(), &u(&[1, 4, 4])[..]);
    }

    #[test]
    fn conditional_pair_examples() {
        assert_eq!(cond_miss_pair::<BigRational>(4, 1, 3, 1).unwrap(), ratio(1, 1));
        assert_eq!(cond_miss_pair::<BigRational>(4, 1, 3, 2).unwrap(), ratio(1, 2));
        assert_eq!(cond_miss_pair::<BigRational>(4, 0, 2, 1).unwrap(), ratio(1, 2));
        assert!(cond_miss_pair::<BigRational>(4, 0, 2, 5).is_err());
    }

    #[test]
    fn count_polynomial_sums_to_path_total() {
        // total independent sets of the path on m vertices is Fibonacci(m + 2)
        let fib = [1u32, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144];
        for m in 0..10 {
            let mut d = PathDecomposition::new();
            d.add_plain(m, 1);
            let total: BigUint = count_polynomial(&d).coeffs().iter().sum();
            assert_eq!(total, BigUint::from(fib[m + 1]));
        }
    }

    #[test]
    fn moments_match_brute_force() {
        for n in 1..=9 {
            for p in [ratio(1, 3), ratio(1, 2), ratio(3, 4)] {
                let m = ModelParams::new(p.clone()).unwrap();
                let (e, v) = brute_moments(n, &p);
                assert_eq!(expected_size(n, &m).unwrap(), e, "n={n} p={p}");
                assert_eq!(variance(n, &m).unwrap(), v, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn graph_polynomial_matches_closed_form() {
        for n in 2..=16 {
            for j in 1..n {
                for i in 0..j {
                    let g = ConditionGraph::build(n, &[i, j]).unwrap();
                    let a: CountPolynomial<BigUint> = graph_count_polynomial(&g).unwrap();
                    let b = count_polynomial(&decompose_pair(n, i, j).unwrap());
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn float_tracks_exact() {
        for n in [5, 10, 20] {
            let e: f64 = expected_size(n, &ModelParams::new(0.5).unwrap()).unwrap();
            let x = expected_size(n, &exact(1, 2)).unwrap();
            assert!((e - x.to_f64()).abs() < 1e-12);
            let v: f64 = variance(n, &ModelParams::new(0.5).unwrap()).unwrap();
            let x = variance(n, &exact(1, 2)).unwrap();
            assert!((v - x.to_f64()).abs() < 1e-10);
        }
    }

    #[test]
    fn expected_missing_is_sum_of_single_misses() {
        for n in [1, 2, 7, 30, 64] {
            let m = exact(1, 2);
            let total = (0..2 * n - 1).fold(ratio(0, 1), |acc, i| acc + crate::misschance::miss_single(n, i, &m).unwrap());
            assert_eq!(expected_missing(n, &m).unwrap(), total);
        }
        let m = ModelParams::new(0.7).unwrap();
        let total: f64 = (0..255).map(|i| crate::misschance::miss_single(128, i, &m).unwrap()).sum();
        assert!((expected_missing(128, &m).unwrap() - total).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_fails_for_large_p() {
        let e: f64 = expected_size(18, &ModelParams::new(0.65).unwrap()).unwrap();
        assert!(expected_lower_bound(18, 0.65).unwrap() > e);
        for n in 10..=200 {
            let e: f64 = expected_size(n, &ModelParams::new(0.55).unwrap()).unwrap();
            assert!(expected_lower_bound(n, 0.55).unwrap() <= e);
        }
    }

    #[test]
    fn bounds_examples() {
        assert!(expected_lower_bound(10, 0.5).is_err());
        let ub = expected_upper_bound(10, 0.5);
        assert!(ub < 19.0);
        let env = mk_envelopes(30, 0.5, 20);
        assert!(!env.valid);
        assert!(mk_envelopes(200, 0.5, 20).valid);
        assert!(expected_size::<f64>(1001, &ModelParams::new(0.5).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn variance_nonnegative_and_mean_in_range(n in 1usize..40, p in 0.02f64..0.98) {
            let m = ModelParams::new(p).unwrap();
            let e = expected_size(n, &m).unwrap();
            prop_assert!(e >= 0.0 && e <= 2.0 * n as f64 - 1.0);
            let v = variance(n, &m).unwrap();
            prop_assert!(v >= -1e-9);
        }

        #[test]
        fn conditional_single_is_probability(n in 1usize..60, x in 0usize..500, r in 0usize..60) {
            let i = x % (2 * n - 1);
            let r = r % (n + 1);
            let v: f64 = cond_miss_single(n, i, r).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
        }

        #[test]
        fn upper_bound_holds(n in 2usize..200, p in 0.02f64..0.98) {
            let m = ModelParams::new(p).unwrap();
            let e = expected_size(n, &m).unwrap();
            prop_assert!(e <= expected_upper_bound(n, p) + 1e-9);
        }
    }
}
