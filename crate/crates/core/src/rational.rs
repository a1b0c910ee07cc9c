//! Exact rationals and the conversions the rest of the crate needs.

use alloc::string::String;
use core::fmt;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub use num_rational::BigRational as Rational;

/// Error from [`parse_rational`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseRationalError {
    pub text: String,
}

impl fmt::Display for ParseRationalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid rational literal `{}`", self.text)
    }
}

/// Builds `n/d`. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `INT`, `INT/INT` or a decimal literal such as `0.25` (converted exactly).
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError { text: String::from(text) };
    let s = text.trim();
    if s.is_empty() {
        return Err(err());
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    let value = if let Some((n, d)) = body.split_once('/') {
        if !digits(n) || !digits(d) {
            return Err(err());
        }
        let n: BigInt = n.parse().map_err(|_| err())?;
        let d: BigInt = d.parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        Rational::new(n, d)
    } else if let Some((whole, frac)) = body.split_once('.') {
        if !(digits(whole) || whole.is_empty()) || !digits(frac) {
            return Err(err());
        }
        let w: BigInt = if whole.is_empty() { BigInt::zero() } else { whole.parse().map_err(|_| err())? };
        let f: BigInt = frac.parse().map_err(|_| err())?;
        let scale = num_traits::pow(BigInt::from(10u32), frac.len());
        Rational::new(w * &scale + f, scale)
    } else {
        if !digits(body) {
            return Err(err());
        }
        Rational::from_integer(body.parse().map_err(|_| err())?)
    };
    Ok(if neg { -value } else { value })
}

pub fn to_f64(r: &Rational) -> f64 {
    match r.to_f64() {
        Some(x) => x,
        None => {
            // Huge numerator and denominator: scale both down first.
            let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
            let n = (r.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (r.denom() >> shift).to_f64().unwrap_or(1.0);
            n / d
        }
    }
}

/// Exact value of a finite float.
pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Bits needed to store numerator and denominator.
pub fn bit_size(r: &Rational) -> u64 {
    r.numer().bits() + r.denom().bits()
}

/// The rational with the smallest denominator in the closed interval `[lo, hi]`.
pub fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    assert!(lo <= hi, "empty interval");
    if lo.is_negative() {
        if !hi.is_negative() {
            return Rational::zero();
        }
        return -simplest_between(&-hi.clone(), &-lo.clone());
    }
    let fl = lo.floor();
    if fl == *lo {
        return fl;
    }
    if fl.clone() + Rational::one() <= *hi {
        return fl + Rational::one();
    }
    // Both endpoints share the integer part; recurse on reciprocals of the fractional parts.
    let lo_frac = lo - &fl;
    let hi_frac = hi - &fl;
    let inner = simplest_between(&hi_frac.recip(), &lo_frac.recip());
    fl + inner.recip()
}

/// Simplest rational within `eps` of `x`.
pub fn snap(x: f64, eps: f64) -> Option<Rational> {
    let lo = from_f64(x - eps)?;
    let hi = from_f64(x + eps)?;
    Some(simplest_between(&lo, &hi))
}

pub fn min_rat<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if a <= b { a } else { b }
}

/// `true` when `r` is an integer power of two reciprocal, handy in tests.
pub fn is_dyadic(r: &Rational) -> bool {
    let d = r.denom();
    d.is_one() || (d.is_even() && (d & (d - BigInt::one())).is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_literal_forms() {
        assert_eq!(parse_rational("1/2").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("3").unwrap(), int(3));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("2/4").unwrap(), rat(1, 2));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("a").is_err());
        assert!(parse_rational("1.").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn simplest_rational_in_interval() {
        assert_eq!(simplest_between(&rat(1, 3), &rat(1, 2)), rat(1, 2));
        assert_eq!(simplest_between(&rat(3, 10), &rat(4, 10)), rat(1, 3));
        assert_eq!(snap(0.4999999999, 1e-8).unwrap(), rat(1, 2));
        assert_eq!(snap(0.6666666666, 1e-8).unwrap(), rat(2, 3));
        assert_eq!(snap(1.0 - 1e-12, 1e-9).unwrap(), int(1));
    }

    #[test]
    fn float_conversion() {
        assert_eq!(to_f64(&rat(1, 4)), 0.25);
        assert_eq!(from_f64(0.5).unwrap(), rat(1, 2));
        let huge = Rational::new(num_traits::pow(BigInt::from(3), 2000) + BigInt::one(), num_traits::pow(BigInt::from(3), 2000) * BigInt::from(2));
        assert!((to_f64(&huge) - 0.5).abs() < 1e-12);
        assert!(is_dyadic(&rat(3, 8)));
        assert!(!is_dyadic(&rat(1, 3)));
    }
}
