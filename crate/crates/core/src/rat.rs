//! Exact rational numbers.
//!
//! Every length, offset and formula value in this crate is a [`Rat`]. There
//! is no floating point anywhere: equality tests such as betweenness or the
//! four-point condition are decided exactly.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// An exact rational in canonical reduced form (positive denominator).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rat(BigRational);

/// Failure to read a rational literal.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RatParseError {
    #[error("empty rational literal")]
    Empty,
    #[error("malformed rational `{0}`: expected <int> or <int>/<int>")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("denominator must be positive in `{0}`")]
    NegativeDenominator(String),
}

impl Rat {
    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat(BigRational::one())
    }

    pub fn int(n: i64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }

    /// `numer / denom`. Panics if `denom == 0`.
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rat(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_big(numer: BigInt, denom: BigInt) -> Self {
        assert!(!denom.is_zero(), "zero denominator");
        Rat(BigRational::new(numer, denom))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Rat {
        Rat(self.0.abs())
    }

    pub fn half(&self) -> Rat {
        Rat(&self.0 / BigInt::from(2))
    }

    /// Truncated subtraction `max(self - other, 0)`.
    pub fn monus(&self, other: &Rat) -> Rat {
        let d = self - other;
        if d.is_negative() {
            Rat::zero()
        } else {
            d
        }
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    /// Value as an `i64` when it is an integer in range.
    pub fn to_i64(&self) -> Option<i64> {
        if self.0.is_integer() {
            self.0.numer().to_i64()
        } else {
            None
        }
    }

    /// Multiply by an integer.
    pub fn times(&self, k: i64) -> Rat {
        Rat(&self.0 * BigInt::from(k))
    }

    /// Divide by a positive integer.
    pub fn over(&self, k: i64) -> Rat {
        assert!(k != 0, "division by zero");
        Rat(&self.0 / BigInt::from(k))
    }

    pub fn max_of<'a, I: IntoIterator<Item = &'a Rat>>(items: I) -> Option<Rat> {
        items.into_iter().max().cloned()
    }

    pub fn min_of<'a, I: IntoIterator<Item = &'a Rat>>(items: I) -> Option<Rat> {
        items.into_iter().min().cloned()
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_int(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix('-').or_else(|| s.strip_prefix('+')).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

impl FromStr for Rat {
    type Err = RatParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(RatParseError::Empty);
        }
        match s.split_once('/') {
            None => parse_int(s)
                .map(|n| Rat(BigRational::from_integer(n)))
                .ok_or_else(|| RatParseError::Malformed(s.to_string())),
            Some((n, d)) => {
                let n = parse_int(n).ok_or_else(|| RatParseError::Malformed(s.to_string()))?;
                let d = parse_int(d).ok_or_else(|| RatParseError::Malformed(s.to_string()))?;
                if d.is_zero() {
                    return Err(RatParseError::ZeroDenominator(s.to_string()));
                }
                if d.is_negative() {
                    return Err(RatParseError::NegativeDenominator(s.to_string()));
                }
                Ok(Rat(BigRational::new(n, d)))
            }
        }
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Self {
        Rat::int(n)
    }
}

impl From<i32> for Rat {
    fn from(n: i32) -> Self {
        Rat::int(n as i64)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait<Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &'a Rat) -> Rat {
                Rat(self.0.$method(&rhs.0))
            }
        }
        impl<'a> $trait<Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat((&self.0).$method(rhs.0))
            }
        }
        impl<'a, 'b> $trait<&'b Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: &'b Rat) -> Rat {
                Rat((&self.0).$method(&rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl<'a> Neg for &'a Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-&self.0)
    }
}

impl AddAssign<&Rat> for Rat {
    fn add_assign(&mut self, rhs: &Rat) {
        self.0 += &rhs.0;
    }
}

impl AddAssign<Rat> for Rat {
    fn add_assign(&mut self, rhs: Rat) {
        self.0 += rhs.0;
    }
}

impl SubAssign<&Rat> for Rat {
    fn sub_assign(&mut self, rhs: &Rat) {
        self.0 -= &rhs.0;
    }
}

impl Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rat> for Rat {
    fn sum<I: Iterator<Item = &'a Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

/// Convenience: compare without allocating a difference.
pub fn cmp(a: &Rat, b: &Rat) -> Ordering {
    a.cmp(b)
}

/// Build a [`Rat`] from an `i64` literal or a `"n/d"` string at test sites.
#[macro_export]
macro_rules! rat {
    ($n:literal / $d:literal) => {
        $crate::Rat::new($n, $d)
    };
    ($n:expr) => {
        $crate::Rat::from($n)
    };
}
