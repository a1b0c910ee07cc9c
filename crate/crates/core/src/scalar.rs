//! Numeric carriers used by the evaluators and the affine engine.

use core::fmt::{Debug, Display};
use core::ops::{Add, Mul, Sub};
use num_traits::{One, Zero};

use crate::rational::{self, Rational};

/// A number type that the semantic engines can compute with.
///
/// `Rational` is exact; `f64` is the fallback when rational iterates grow too large.
pub trait Scalar:
    Clone + PartialEq + PartialOrd + Debug + Display + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
    const EXACT: bool;
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    /// Storage size, used for the rational bit budget. Always 0 for floats.
    fn size_bits(&self) -> u64;

    fn min_of(a: Self, b: Self) -> Self {
        if b < a { b } else { a }
    }
    fn max_of(a: Self, b: Self) -> Self {
        if b > a { b } else { a }
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        rational::to_f64(self)
    }
    fn size_bits(&self) -> u64 {
        rational::bit_size(self)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    fn from_rational(r: &Rational) -> Self {
        rational::to_f64(r)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn size_bits(&self) -> u64 {
        0
    }
}

/// Absolute difference as a float.
pub fn gap<N: Scalar>(a: &N, b: &N) -> f64 {
    if a >= b { (a.clone() - b.clone()).to_f64() } else { (b.clone() - a.clone()).to_f64() }
}
