//! Polynomials over the rationals that carry a float shadow. Comparisons, `min` and `max` are decided
//! on the shadow, which freezes every branch choice at the current numeric point.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Mul, Sub};
use num_traits::{One, Zero};

use crate::rational::{self, Rational};
use crate::scalar::Scalar;

/// A monomial: sorted variable indices, repeated for powers.
pub type Monomial = Vec<u32>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn constant(c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        Poly { terms }
    }
    pub fn var(v: u32) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(alloc::vec![v], Rational::one());
        Poly { terms }
    }
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|m| m.len()).max().unwrap_or(0)
    }
    pub fn constant_term(&self) -> Rational {
        self.terms.get(&Vec::new()).cloned().unwrap_or_else(Rational::zero)
    }
    /// Coefficient of the linear term in `v`.
    pub fn linear_coeff(&self, v: u32) -> Rational {
        self.terms.get(&alloc::vec![v]).cloned().unwrap_or_else(Rational::zero)
    }
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| rational::to_f64(c) * m.iter().map(|&v| x[v as usize]).product::<f64>())
            .sum()
    }
    pub fn eval(&self, x: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &v in m {
                t *= &x[v as usize];
            }
            acc += t;
        }
        acc
    }
    /// Partial derivative in `v`, evaluated at `x`.
    pub fn deriv_f64(&self, v: u32, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let count = m.iter().filter(|&&w| w == v).count();
            if count == 0 {
                continue;
            }
            let mut prod = rational::to_f64(c) * count as f64;
            let mut skipped = false;
            for &w in m {
                if w == v && !skipped {
                    skipped = true;
                    continue;
                }
                prod *= x[w as usize];
            }
            acc += prod;
        }
        acc
    }
    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(m.clone()).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }
}

/// A polynomial together with its value at the current numeric point.
#[derive(Clone, Debug)]
pub struct Sym {
    pub poly: Poly,
    pub shadow: f64,
}

impl Sym {
    pub fn var(v: u32, shadow: f64) -> Self {
        Sym { poly: Poly::var(v), shadow }
    }
}

impl PartialEq for Sym {
    fn eq(&self, o: &Self) -> bool {
        self.poly == o.poly
    }
}

impl PartialOrd for Sym {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        self.shadow.partial_cmp(&o.shadow)
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.shadow)
    }
}

impl Add for Sym {
    type Output = Sym;
    fn add(mut self, o: Sym) -> Sym {
        for (m, c) in o.poly.terms {
            self.poly.add_term(m, c);
        }
        Sym { poly: self.poly, shadow: self.shadow + o.shadow }
    }
}

impl Sub for Sym {
    type Output = Sym;
    fn sub(mut self, o: Sym) -> Sym {
        for (m, c) in o.poly.terms {
            self.poly.add_term(m, -c);
        }
        Sym { poly: self.poly, shadow: self.shadow - o.shadow }
    }
}

impl Mul for Sym {
    type Output = Sym;
    fn mul(self, o: Sym) -> Sym {
        let mut out = Poly::default();
        for (m1, c1) in &self.poly.terms {
            for (m2, c2) in &o.poly.terms {
                let mut m = m1.clone();
                m.extend_from_slice(m2);
                m.sort_unstable();
                out.add_term(m, c1 * c2);
            }
        }
        Sym { poly: out, shadow: self.shadow * o.shadow }
    }
}

impl Zero for Sym {
    fn zero() -> Self {
        Sym { poly: Poly::default(), shadow: 0.0 }
    }
    fn is_zero(&self) -> bool {
        self.poly.terms.is_empty()
    }
}

impl One for Sym {
    fn one() -> Self {
        Sym { poly: Poly::constant(Rational::one()), shadow: 1.0 }
    }
}

impl Scalar for Sym {
    const EXACT: bool = false;
    fn from_rational(r: &Rational) -> Self {
        Sym { poly: Poly::constant(r.clone()), shadow: rational::to_f64(r) }
    }
    fn to_f64(&self) -> f64 {
        self.shadow
    }
    fn size_bits(&self) -> u64 {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn arithmetic_and_shadow() {
        let x = Sym::var(0, 0.5);
        let y = Sym::var(1, 0.25);
        let p = (x.clone() + y.clone()) * x.clone() + Sym::from_rational(&rat(1, 3));
        assert_eq!(p.poly.degree(), 2);
        assert!((p.shadow - (0.75 * 0.5 + 1.0 / 3.0)).abs() < 1e-12);
        assert!((p.poly.eval_f64(&[0.5, 0.25]) - p.shadow).abs() < 1e-12);
        assert!((p.poly.deriv_f64(0, &[0.5, 0.25]) - 1.25).abs() < 1e-12);
        assert_eq!((x.clone() - x.clone()).poly, Poly::default());
        // Branches are frozen on the shadow.
        assert_eq!(Sym::min_of(x.clone(), y.clone()).poly, y.poly);
    }
}
