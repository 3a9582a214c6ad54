//! Probability parameters and the scalar domain they live in.
//!
//! Every computation is generic over [`Scalar`]. `f64` is the fast FLOAT
//! mode; [`BigRational`] is the EXACT mode. Float-only routines (anything
//! that needs a square root or a real exponent) take `f64` directly, so
//! a float can never leak into an exact result.

use std::fmt;
use std::ops::{Add, Div, Mul, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericMode {
    Exact,
    Float,
}

impl fmt::Display for NumericMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NumericMode::Exact => "exact",
            NumericMode::Float => "float",
        })
    }
}

pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    const MODE: NumericMode;

    fn from_u64(v: u64) -> Self;
    fn from_biguint(v: &BigUint) -> Self;
    fn to_f64(&self) -> f64;

    /// Lifts a float result into the domain. Always `None` in exact mode.
    fn from_float(x: f64) -> Option<Self>;

    fn powu(&self, e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base.clone();
            }
            e >>= 1;
            if e > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }

    /// Sum of a sequence. The float implementation is compensated.
    fn sum_all<I: IntoIterator<Item = Self>>(terms: I) -> Self {
        terms.into_iter().fold(Self::zero(), |a, b| a + b)
    }
}

impl Scalar for f64 {
    const MODE: NumericMode = NumericMode::Float;

    fn from_u64(v: u64) -> Self {
        v as f64
    }

    fn from_biguint(v: &BigUint) -> Self {
        v.to_f64().unwrap_or(f64::INFINITY)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_float(x: f64) -> Option<Self> {
        Some(x)
    }

    fn powu(&self, e: u64) -> Self {
        if e <= i32::MAX as u64 {
            self.powi(e as i32)
        } else {
            self.powf(e as f64)
        }
    }

    fn sum_all<I: IntoIterator<Item = Self>>(terms: I) -> Self {
        neumaier_sum(terms)
    }
}

impl Scalar for BigRational {
    const MODE: NumericMode = NumericMode::Exact;

    fn from_u64(v: u64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_biguint(v: &BigUint) -> Self {
        BigRational::from_integer(BigInt::from(v.clone()))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_float(_: f64) -> Option<Self> {
        None
    }
}

/// Neumaier's variant of Kahan summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn in_open_unit<S: Scalar>(x: &S) -> bool {
    *x > S::zero() && *x < S::one()
}

fn in_closed_unit<S: Scalar>(x: &S) -> bool {
    *x >= S::zero() && *x <= S::one()
}

/// Independent model: each element of `[0, n-1]` joins `A` with probability `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<S> {
    p: S,
    q: S,
}

impl<S: Scalar> ModelParams<S> {
    pub fn new(p: S) -> Result<Self> {
        if !in_open_unit(&p) {
            return Err(Error::InvalidProbability {
                field: "p",
                range: "(0,1)",
                value: p.to_string(),
            });
        }
        let q = S::one() - p.clone();
        Ok(ModelParams { p, q })
    }

    pub fn p(&self) -> &S {
        &self.p
    }

    pub fn q(&self) -> &S {
        &self.q
    }

    pub fn mode(&self) -> NumericMode {
        S::MODE
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.p.clone()).map(|_| ())
    }
}

/// Correlated model: `i` joins `A` with probability `p`; given that, `i`
/// joins `B` with probability `p1`, otherwise with probability `p2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedParams<S> {
    p: S,
    p1: S,
    p2: S,
    q: S,
    q1: S,
    q2: S,
}

impl<S: Scalar> CorrelatedParams<S> {
    pub fn new(p: S, p1: S, p2: S) -> Result<Self> {
        if !in_open_unit(&p) {
            return Err(Error::InvalidProbability {
                field: "p",
                range: "(0,1)",
                value: p.to_string(),
            });
        }
        for (field, v) in [("p1", &p1), ("p2", &p2)] {
            if !in_closed_unit(v) {
                return Err(Error::InvalidProbability {
                    field,
                    range: "[0,1]",
                    value: v.to_string(),
                });
            }
        }
        let q = S::one() - p.clone();
        let q1 = S::one() - p1.clone();
        let q2 = S::one() - p2.clone();
        Ok(CorrelatedParams { p, p1, p2, q, q1, q2 })
    }

    /// The independent-sumset specialisation `B = A`.
    pub fn identical(p: S) -> Result<Self> {
        Self::new(p, S::one(), S::zero())
    }

    pub fn p(&self) -> &S {
        &self.p
    }
    pub fn p1(&self) -> &S {
        &self.p1
    }
    pub fn p2(&self) -> &S {
        &self.p2
    }
    pub fn q(&self) -> &S {
        &self.q
    }
    pub fn q1(&self) -> &S {
        &self.q1
    }
    pub fn q2(&self) -> &S {
        &self.q2
    }

    /// Joint law of `(i in A, i in B)` as `[P(11), P(10), P(01), P(00)]`.
    pub fn joint(&self) -> [S; 4] {
        [
            self.p.clone() * self.p1.clone(),
            self.p.clone() * self.q1.clone(),
            self.q.clone() * self.p2.clone(),
            self.q.clone() * self.q2.clone(),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.p.clone(), self.p1.clone(), self.p2.clone()).map(|_| ())
    }
}

/// A probability as typed on a command line: `a/b` is exact, anything else is a float.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbValue {
    Exact(BigRational),
    Float(f64),
}

impl ProbValue {
    pub fn mode(&self) -> NumericMode {
        match self {
            ProbValue::Exact(_) => NumericMode::Exact,
            ProbValue::Float(_) => NumericMode::Float,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            ProbValue::Exact(r) => Scalar::to_f64(r),
            ProbValue::Float(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            ProbValue::Exact(r) => Some(r),
            ProbValue::Float(_) => None,
        }
    }
}

impl FromStr for ProbValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.contains('/') {
            let r = BigRational::from_str(s)
                .map_err(|_| Error::InvalidArgument(format!("cannot parse rational {s:?}")))?;
            Ok(ProbValue::Exact(r))
        } else {
            let x: f64 = s
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("cannot parse number {s:?}")))?;
            Ok(ProbValue::Float(x))
        }
    }
}

impl fmt::Display for ProbValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbValue::Exact(r) => write!(f, "{r}"),
            ProbValue::Float(x) => write!(f, "{x}"),
        }
    }
}

/// Shorthand for building an exact rational in tests and examples.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_boundary_p() {
        let err = ModelParams::new(1.0f64).unwrap_err();
        assert!(err.to_string().contains("p must be in (0,1)"));
        assert!(ModelParams::new(0.0f64).is_err());
        assert!(ModelParams::new(f64::NAN).is_err());
        assert!(ModelParams::new(ratio(3, 2)).is_err());
    }

    #[test]
    fn complement_is_exact() {
        let m = ModelParams::new(ratio(1, 3)).unwrap();
        assert_eq!(m.q(), &ratio(2, 3));
        assert_eq!(m.mode(), NumericMode::Exact);
    }

    #[test]
    fn correlated_accepts_degenerate_conditionals() {
        let c = CorrelatedParams::new(0.5f64, 1.0, 0.0).unwrap();
        assert_eq!(c.joint(), [0.5, 0.0, 0.0, 0.5]);
        let err = CorrelatedParams::new(0.5f64, 1.5, 0.0).unwrap_err();
        assert!(err.to_string().starts_with("p1"));
        let err = CorrelatedParams::new(0.5f64, 0.5, -0.1).unwrap_err();
        assert!(err.to_string().starts_with("p2"));
    }

    #[test]
    fn parse_prob_values() {
        assert_eq!("1/2".parse::<ProbValue>().unwrap(), ProbValue::Exact(ratio(1, 2)));
        assert_eq!("0.5".parse::<ProbValue>().unwrap(), ProbValue::Float(0.5));
        assert!("x/2".parse::<ProbValue>().is_err());
        assert!("abc".parse::<ProbValue>().is_err());
    }

    #[test]
    fn powu_matches_repeated_product() {
        let r = ratio(2, 3);
        assert_eq!(r.powu(5), ratio(32, 243));
        assert_eq!(r.powu(0), ratio(1, 1));
        assert!((0.3f64.powu(7) - 0.3f64.powi(7)).abs() < 1e-18);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let terms = std::iter::once(1.0).chain(std::iter::repeat_n(1e-16, 10_000));
        let s = f64::sum_all(terms);
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn validation_is_idempotent(p in 0.0001f64..0.9999) {
            let m = ModelParams::new(p).unwrap();
            prop_assert!(m.validate().is_ok());
            prop_assert!((m.p() + m.q() - 1.0).abs() < 1e-15);
        }

        #[test]
        fn correlated_joint_sums_to_one(p in 0.01f64..0.99, p1 in 0.0f64..=1.0, p2 in 0.0f64..=1.0) {
            let c = CorrelatedParams::new(p, p1, p2).unwrap();
            prop_assert!(c.validate().is_ok());
            let s: f64 = c.joint().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
