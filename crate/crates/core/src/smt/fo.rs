use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use num_traits::{One, Signed, Zero};

use crate::rational::Rational;

/// Real-valued terms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(Rational),
    Var(String),
    Add(Vec<Term>),
    Mul(Vec<Term>),
    Min(Box<Term>, Box<Term>),
    Max(Box<Term>, Box<Term>),
}

impl Term {
    pub fn zero() -> Term {
        Term::Const(Rational::zero())
    }
    pub fn one() -> Term {
        Term::Const(Rational::one())
    }
    pub fn var(x: impl Into<String>) -> Term {
        Term::Var(x.into())
    }
    pub fn as_const(&self) -> Option<&Rational> {
        match self {
            Term::Const(c) => Some(c),
            _ => None,
        }
    }
    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_zero())
    }

    /// Sum with constants folded and zeros dropped.
    pub fn sum(items: impl IntoIterator<Item = Term>) -> Term {
        let mut c = Rational::zero();
        let mut rest = Vec::new();
        for t in items {
            match t {
                Term::Const(x) => c += x,
                Term::Add(v) => {
                    for u in v {
                        match u {
                            Term::Const(x) => c += x,
                            u => rest.push(u),
                        }
                    }
                }
                t => rest.push(t),
            }
        }
        if !c.is_zero() {
            rest.insert(0, Term::Const(c));
        }
        match rest.len() {
            0 => Term::zero(),
            1 => rest.pop().unwrap(),
            _ => Term::Add(rest),
        }
    }

    /// Product with constants folded.
    pub fn product(items: impl IntoIterator<Item = Term>) -> Term {
        let mut c = Rational::one();
        let mut rest = Vec::new();
        for t in items {
            match t {
                Term::Const(x) => c *= x,
                Term::Mul(v) => {
                    for u in v {
                        match u {
                            Term::Const(x) => c *= x,
                            u => rest.push(u),
                        }
                    }
                }
                t => rest.push(t),
            }
        }
        if c.is_zero() {
            return Term::zero();
        }
        if !c.is_one() {
            rest.insert(0, Term::Const(c));
        }
        match rest.len() {
            0 => Term::one(),
            1 => rest.pop().unwrap(),
            _ => Term::Mul(rest),
        }
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::sum([a, b])
    }
    pub fn mul(a: Term, b: Term) -> Term {
        Term::product([a, b])
    }
    pub fn min(a: Term, b: Term) -> Term {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Term::Const(if x <= y { x.clone() } else { y.clone() }),
            _ if a == b => a,
            _ => Term::Min(Box::new(a), Box::new(b)),
        }
    }
    pub fn max(a: Term, b: Term) -> Term {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Term::Const(if x >= y { x.clone() } else { y.clone() }),
            _ if a == b => a,
            _ => Term::Max(Box::new(a), Box::new(b)),
        }
    }

    pub fn has_minmax(&self) -> bool {
        match self {
            Term::Min(..) | Term::Max(..) => true,
            Term::Add(v) | Term::Mul(v) => v.iter().any(|t| t.has_minmax()),
            _ => false,
        }
    }

    fn vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(x) => {
                out.insert(x.clone());
            }
            Term::Add(v) | Term::Mul(v) => v.iter().for_each(|t| t.vars_into(out)),
            Term::Min(a, b) | Term::Max(a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            Term::Const(_) => {}
        }
    }

    pub fn eval(&self, env: &BTreeMap<String, Rational>) -> Result<Rational, FoEvalError> {
        Ok(match self {
            Term::Const(c) => c.clone(),
            Term::Var(x) => env.get(x).cloned().ok_or_else(|| FoEvalError::Unbound(x.clone()))?,
            Term::Add(v) => {
                let mut acc = Rational::zero();
                for t in v {
                    acc += t.eval(env)?;
                }
                acc
            }
            Term::Mul(v) => {
                let mut acc = Rational::one();
                for t in v {
                    acc *= t.eval(env)?;
                }
                acc
            }
            Term::Min(a, b) => {
                let (x, y) = (a.eval(env)?, b.eval(env)?);
                if x <= y { x } else { y }
            }
            Term::Max(a, b) => {
                let (x, y) = (a.eval(env)?, b.eval(env)?);
                if x >= y { x } else { y }
            }
        })
    }

    /// The first `min`/`max` subterm, outermost first.
    fn first_minmax(&self) -> Option<&Term> {
        match self {
            Term::Min(..) | Term::Max(..) => Some(self),
            Term::Add(v) | Term::Mul(v) => v.iter().find_map(|t| t.first_minmax()),
            _ => None,
        }
    }

    fn replace(&self, from: &Term, to: &Term) -> Term {
        if self == from {
            return to.clone();
        }
        match self {
            Term::Add(v) => Term::Add(v.iter().map(|t| t.replace(from, to)).collect()),
            Term::Mul(v) => Term::Mul(v.iter().map(|t| t.replace(from, to)).collect()),
            Term::Min(a, b) => Term::Min(Box::new(a.replace(from, to)), Box::new(b.replace(from, to))),
            Term::Max(a, b) => Term::Max(Box::new(a.replace(from, to)), Box::new(b.replace(from, to))),
            t => t.clone(),
        }
    }
}

/// First-order formulas over the reals.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FOFormula {
    True,
    False,
    Le(Term, Term),
    Lt(Term, Term),
    Eq(Term, Term),
    And(Vec<FOFormula>),
    Or(Vec<FOFormula>),
    Not(Box<FOFormula>),
    Implies(Box<FOFormula>, Box<FOFormula>),
    Exists(Vec<String>, Box<FOFormula>),
    Forall(Vec<String>, Box<FOFormula>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FoEvalError {
    Unbound(String),
    Quantifier,
}

impl fmt::Display for FoEvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FoEvalError::Unbound(x) => write!(f, "unbound variable {x}"),
            FoEvalError::Quantifier => write!(f, "cannot evaluate a quantifier"),
        }
    }
}

impl FOFormula {
    pub fn le(a: Term, b: Term) -> FOFormula {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => FOFormula::bool(x <= y),
            _ => FOFormula::Le(a, b),
        }
    }
    pub fn lt(a: Term, b: Term) -> FOFormula {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => FOFormula::bool(x < y),
            _ => FOFormula::Lt(a, b),
        }
    }
    pub fn eq(a: Term, b: Term) -> FOFormula {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => FOFormula::bool(x == y),
            _ if a == b => FOFormula::True,
            _ => FOFormula::Eq(a, b),
        }
    }
    pub fn bool(b: bool) -> FOFormula {
        if b { FOFormula::True } else { FOFormula::False }
    }
    /// Conjunction with `True` dropped and `False` absorbing.
    pub fn and(items: impl IntoIterator<Item = FOFormula>) -> FOFormula {
        let mut out = Vec::new();
        for f in items {
            match f {
                FOFormula::True => {}
                FOFormula::False => return FOFormula::False,
                FOFormula::And(v) => out.extend(v),
                f => out.push(f),
            }
        }
        match out.len() {
            0 => FOFormula::True,
            1 => out.pop().unwrap(),
            _ => FOFormula::And(out),
        }
    }
    pub fn or(items: impl IntoIterator<Item = FOFormula>) -> FOFormula {
        let mut out = Vec::new();
        for f in items {
            match f {
                FOFormula::False => {}
                FOFormula::True => return FOFormula::True,
                FOFormula::Or(v) => out.extend(v),
                f => out.push(f),
            }
        }
        match out.len() {
            0 => FOFormula::False,
            1 => out.pop().unwrap(),
            _ => FOFormula::Or(out),
        }
    }
    pub fn implies(a: FOFormula, b: FOFormula) -> FOFormula {
        match (&a, &b) {
            (FOFormula::True, _) => b,
            (FOFormula::False, _) | (_, FOFormula::True) => FOFormula::True,
            _ => FOFormula::Implies(Box::new(a), Box::new(b)),
        }
    }
    pub fn forall(vars: Vec<String>, body: FOFormula) -> FOFormula {
        if vars.is_empty() { body } else { FOFormula::Forall(vars, Box::new(body)) }
    }
    pub fn exists(vars: Vec<String>, body: FOFormula) -> FOFormula {
        if vars.is_empty() { body } else { FOFormula::Exists(vars, Box::new(body)) }
    }

    pub fn count_forall(&self) -> usize {
        match self {
            FOFormula::Forall(_, b) => 1 + b.count_forall(),
            FOFormula::Exists(_, b) | FOFormula::Not(b) => b.count_forall(),
            FOFormula::And(v) | FOFormula::Or(v) => v.iter().map(|f| f.count_forall()).sum(),
            FOFormula::Implies(a, b) => a.count_forall() + b.count_forall(),
            _ => 0,
        }
    }

    pub fn has_minmax(&self) -> bool {
        match self {
            FOFormula::Le(a, b) | FOFormula::Lt(a, b) | FOFormula::Eq(a, b) => a.has_minmax() || b.has_minmax(),
            FOFormula::And(v) | FOFormula::Or(v) => v.iter().any(|f| f.has_minmax()),
            FOFormula::Not(a) | FOFormula::Exists(_, a) | FOFormula::Forall(_, a) => a.has_minmax(),
            FOFormula::Implies(a, b) => a.has_minmax() || b.has_minmax(),
            _ => false,
        }
    }

    /// Variables that occur free.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.free_into(&mut out, &mut Vec::new());
        out
    }

    fn free_into(&self, out: &mut BTreeSet<String>, bound: &mut Vec<String>) {
        let term = |t: &Term, out: &mut BTreeSet<String>, bound: &Vec<String>| {
            let mut s = BTreeSet::new();
            t.vars_into(&mut s);
            out.extend(s.into_iter().filter(|x| !bound.contains(x)));
        };
        match self {
            FOFormula::Le(a, b) | FOFormula::Lt(a, b) | FOFormula::Eq(a, b) => {
                term(a, out, bound);
                term(b, out, bound);
            }
            FOFormula::And(v) | FOFormula::Or(v) => v.iter().for_each(|f| f.free_into(out, bound)),
            FOFormula::Not(a) => a.free_into(out, bound),
            FOFormula::Implies(a, b) => {
                a.free_into(out, bound);
                b.free_into(out, bound);
            }
            FOFormula::Exists(vs, a) | FOFormula::Forall(vs, a) => {
                let before = bound.len();
                bound.extend(vs.iter().cloned());
                a.free_into(out, bound);
                bound.truncate(before);
            }
            FOFormula::True | FOFormula::False => {}
        }
    }

    /// Truth value of a quantifier-free formula under `env`.
    pub fn eval(&self, env: &BTreeMap<String, Rational>) -> Result<bool, FoEvalError> {
        Ok(match self {
            FOFormula::True => true,
            FOFormula::False => false,
            FOFormula::Le(a, b) => a.eval(env)? <= b.eval(env)?,
            FOFormula::Lt(a, b) => a.eval(env)? < b.eval(env)?,
            FOFormula::Eq(a, b) => a.eval(env)? == b.eval(env)?,
            FOFormula::And(v) => {
                for f in v {
                    if !f.eval(env)? {
                        return Ok(false);
                    }
                }
                true
            }
            FOFormula::Or(v) => {
                for f in v {
                    if f.eval(env)? {
                        return Ok(true);
                    }
                }
                false
            }
            FOFormula::Not(a) => !a.eval(env)?,
            FOFormula::Implies(a, b) => !a.eval(env)? || b.eval(env)?,
            FOFormula::Exists(..) | FOFormula::Forall(..) => return Err(FoEvalError::Quantifier),
        })
    }

    /// Replaces every atom mentioning `min`/`max` by a case split on the first such subterm.
    /// Returns the rewritten formula and the number of splits made.
    pub fn expand_minmax(&self) -> (FOFormula, usize) {
        let mut count = 0;
        let f = self.expand_rec(&mut count);
        (f, count)
    }

    fn expand_rec(&self, count: &mut usize) -> FOFormula {
        match self {
            FOFormula::Le(a, b) | FOFormula::Lt(a, b) | FOFormula::Eq(a, b) => {
                let pick = a.first_minmax().or_else(|| b.first_minmax()).cloned();
                let Some(mm) = pick else { return self.clone() };
                *count += 1;
                let (x, y, is_min) = match &mm {
                    Term::Min(x, y) => ((**x).clone(), (**y).clone(), true),
                    Term::Max(x, y) => ((**x).clone(), (**y).clone(), false),
                    _ => unreachable!(),
                };
                let rebuild = |with: &Term, count: &mut usize| -> FOFormula {
                    let (a2, b2) = (a.replace(&mm, with), b.replace(&mm, with));
                    match self {
                        FOFormula::Le(..) => FOFormula::Le(a2, b2),
                        FOFormula::Lt(..) => FOFormula::Lt(a2, b2),
                        _ => FOFormula::Eq(a2, b2),
                    }
                    .expand_rec(count)
                };
                // min(x,y) is x when x <= y, else y; max dually.
                let (first, second) = if is_min { (x.clone(), y.clone()) } else { (y.clone(), x.clone()) };
                let g1 = FOFormula::Le(first.clone(), second.clone()).expand_rec(count);
                let c1 = rebuild(&x, count);
                let g2 = FOFormula::Lt(second, first).expand_rec(count);
                let c2 = rebuild(&y, count);
                let (first_case, second_case) = (FOFormula::and([g1, c1]), FOFormula::and([g2, c2]));
                FOFormula::or([first_case, second_case])
            }
            FOFormula::And(v) => FOFormula::And(v.iter().map(|f| f.expand_rec(count)).collect()),
            FOFormula::Or(v) => FOFormula::Or(v.iter().map(|f| f.expand_rec(count)).collect()),
            FOFormula::Not(a) => FOFormula::Not(Box::new(a.expand_rec(count))),
            FOFormula::Implies(a, b) => FOFormula::Implies(Box::new(a.expand_rec(count)), Box::new(b.expand_rec(count))),
            FOFormula::Exists(vs, a) => FOFormula::Exists(vs.clone(), Box::new(a.expand_rec(count))),
            FOFormula::Forall(vs, a) => FOFormula::Forall(vs.clone(), Box::new(a.expand_rec(count))),
            f => f.clone(),
        }
    }
}

fn smt_rational(r: &Rational) -> String {
    let body = |x: &Rational| {
        if x.is_integer() {
            format!("{}.0", x.numer())
        } else {
            format!("(/ {}.0 {}.0)", x.numer(), x.denom())
        }
    };
    if r.is_negative() { format!("(- {})", body(&-r.clone())) } else { body(r) }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "{}", smt_rational(c)),
            Term::Var(x) => write!(f, "{x}"),
            Term::Add(v) | Term::Mul(v) => {
                write!(f, "({}", if matches!(self, Term::Add(_)) { "+" } else { "*" })?;
                for t in v {
                    write!(f, " {t}")?;
                }
                write!(f, ")")
            }
            Term::Min(a, b) => write!(f, "(min {a} {b})"),
            Term::Max(a, b) => write!(f, "(max {a} {b})"),
        }
    }
}

impl fmt::Display for FOFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FOFormula::True => write!(f, "true"),
            FOFormula::False => write!(f, "false"),
            FOFormula::Le(a, b) => write!(f, "(<= {a} {b})"),
            FOFormula::Lt(a, b) => write!(f, "(< {a} {b})"),
            FOFormula::Eq(a, b) => write!(f, "(= {a} {b})"),
            FOFormula::And(v) | FOFormula::Or(v) => {
                write!(f, "({}", if matches!(self, FOFormula::And(_)) { "and" } else { "or" })?;
                for x in v {
                    write!(f, " {x}")?;
                }
                write!(f, ")")
            }
            FOFormula::Not(a) => write!(f, "(not {a})"),
            FOFormula::Implies(a, b) => write!(f, "(=> {a} {b})"),
            FOFormula::Exists(vs, a) | FOFormula::Forall(vs, a) => {
                write!(f, "({} (", if matches!(self, FOFormula::Exists(..)) { "exists" } else { "forall" })?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "({v} Real)")?;
                }
                write!(f, ") {a})")
            }
        }
    }
}
