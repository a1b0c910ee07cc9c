//! Denotational semantics over a finite chain: Kleene iteration for order-0 formulas and
//! bounded unfolding for formulas of any order.

mod bounded;
mod check;
mod order0;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use bounded::{eval_bounded, eval_bounded_with, BoundedOutcome, SemValue};
pub use check::{check_models, CheckOutcome, ModelVerdict};
pub use order0::{eval_order0, eval_order0_as, eval_order0_with, Order0Outcome};

use crate::formula::TypeError;
use crate::rational::Rational;
use crate::scalar::Scalar;

/// One semantic value of type `*`: component `i` is the value at state `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantVec<N>(pub Vec<N>);

impl<N: Scalar> QuantVec<N> {
    pub fn zeros(n: usize) -> Self {
        QuantVec(alloc::vec![N::zero(); n])
    }
    pub fn ones(n: usize) -> Self {
        QuantVec(alloc::vec![N::one(); n])
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|x| x.to_f64()).collect()
    }
    /// Componentwise order.
    pub fn leq(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
    pub fn sup_gap(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| crate::scalar::gap(a, b)).fold(0.0, f64::max)
    }
}

/// Evaluation values in whichever number type was used.
#[derive(Clone, Debug, PartialEq)]
pub enum Values {
    Exact(Vec<Rational>),
    Float(Vec<f64>),
}

impl Values {
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Values::Exact(v) => v.iter().map(crate::rational::to_f64).collect(),
            Values::Float(v) => v.clone(),
        }
    }
    pub fn len(&self) -> usize {
        match self {
            Values::Exact(v) => v.len(),
            Values::Float(v) => v.len(),
        }
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn as_exact(&self) -> Option<&[Rational]> {
        match self {
            Values::Exact(v) => Some(v),
            Values::Float(_) => None,
        }
    }
    /// Human-readable component: a rational or a float.
    pub fn component(&self, i: usize) -> String {
        match self {
            Values::Exact(v) => alloc::format!("{}", v[i]),
            Values::Float(v) => alloc::format!("{}", v[i]),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    /// Sup-norm tolerance for stopping Kleene iteration.
    pub tol: f64,
    pub max_iter: usize,
    /// Unfolding depth for the bounded evaluator.
    pub depth: usize,
    /// Largest numerator+denominator size (bits) tolerated before switching to floats.
    pub bit_budget: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { tol: 1e-9, max_iter: 1_000_000, depth: 10, bit_budget: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    Type(TypeError),
    NotClosed(String),
    NotProp(String),
    NotOrderZero(usize),
    UnknownAtom(String),
    IterationCap { var: String, previous: Vec<f64>, last: Vec<f64>, gap: f64 },
    /// Internal: rational iterates outgrew the bit budget.
    BitBudget,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::Type(e) => write!(f, "{e}"),
            EvalError::NotClosed(x) => write!(f, "formula has free variable `{x}`"),
            EvalError::NotProp(t) => write!(f, "formula has type {t}, expected *"),
            EvalError::NotOrderZero(o) => write!(f, "formula has order {o}; order-0 evaluation needs order 0"),
            EvalError::UnknownAtom(a) => write!(f, "atom `{a}` is not labeled in the chain"),
            EvalError::IterationCap { var, previous, last, gap } => write!(
                f,
                "fixpoint `{var}` did not converge within the iteration cap (gap {gap:e}; last two iterates {previous:?}, {last:?})"
            ),
            EvalError::BitBudget => write!(f, "rational iterates exceeded the bit budget"),
        }
    }
}

impl From<TypeError> for EvalError {
    fn from(e: TypeError) -> Self {
        EvalError::Type(e)
    }
}

/// Indicator vector of an atom.
pub(crate) fn atom_vector<N: Scalar>(m: &crate::markov::MarkovChain, atom: &str) -> Result<Vec<N>, EvalError> {
    let set = m.label(atom).ok_or_else(|| EvalError::UnknownAtom(String::from(atom)))?;
    Ok((0..m.len()).map(|i| if set.contains(i) { N::one() } else { N::zero() }).collect())
}

pub(crate) fn avg_vec<N: Scalar>(rows: &[Vec<(usize, N)>], x: &[N]) -> Vec<N> {
    rows.iter()
        .map(|row| row.iter().fold(N::zero(), |acc, (j, p)| acc + p.clone() * x[*j].clone()))
        .collect()
}

pub(crate) fn box_vec<N: Scalar>(m: &crate::markov::MarkovChain, x: &[N]) -> Vec<N> {
    (0..m.len())
        .map(|i| {
            let s = m.successors(i);
            s[1..].iter().fold(x[s[0]].clone(), |acc, &j| N::min_of(acc, x[j].clone()))
        })
        .collect()
}

pub(crate) fn dia_vec<N: Scalar>(m: &crate::markov::MarkovChain, x: &[N]) -> Vec<N> {
    (0..m.len())
        .map(|i| {
            let s = m.successors(i);
            s[1..].iter().fold(x[s[0]].clone(), |acc, &j| N::max_of(acc, x[j].clone()))
        })
        .collect()
}

pub(crate) fn threshold_holds<N: Scalar>(v: &N, j: &crate::formula::ThresholdBound) -> bool {
    if N::EXACT {
        // Exact comparison through the rational image of the scalar.
        let r = N::from_rational(j.r());
        match j.kind() {
            crate::formula::BoundKind::Ge => *v >= r,
            crate::formula::BoundKind::Gt => *v > r,
        }
    } else {
        j.contains_f64(v.to_f64())
    }
}
