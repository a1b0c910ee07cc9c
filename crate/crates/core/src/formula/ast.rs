use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use num_traits::{One, Zero};

use crate::rational::Rational;

/// Simple types: `*` for quantitative propositions and arrows.
#[derive(Clone, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub enum SimpleType {
    Prop,
    Arrow(Box<SimpleType>, Box<SimpleType>),
}

impl SimpleType {
    pub fn arrow(a: SimpleType, r: SimpleType) -> SimpleType {
        SimpleType::Arrow(Box::new(a), Box::new(r))
    }
    /// `*^m -> *`.
    pub fn first_order(m: usize) -> SimpleType {
        (0..m).fold(SimpleType::Prop, |acc, _| SimpleType::arrow(SimpleType::Prop, acc))
    }
    pub fn order(&self) -> usize {
        match self {
            SimpleType::Prop => 0,
            SimpleType::Arrow(a, r) => (a.order() + 1).max(r.order()),
        }
    }
    /// Number of arguments if the type is `*^m -> *`.
    pub fn first_order_arity(&self) -> Option<usize> {
        match self {
            SimpleType::Prop => Some(0),
            SimpleType::Arrow(a, r) if **a == SimpleType::Prop => r.first_order_arity().map(|m| m + 1),
            SimpleType::Arrow(..) => None,
        }
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleType::Prop => write!(f, "*"),
            SimpleType::Arrow(a, r) => match **a {
                SimpleType::Prop => write!(f, "*->{r}"),
                _ => write!(f, "({a})->{r}"),
            },
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum BoundKind {
    Ge,
    Gt,
}

/// The interval `J` of a threshold: `>= r` or `> r`.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct ThresholdBound {
    kind: BoundKind,
    r: Rational,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum BoundError {
    OutOfRange(String),
    Trivial(String),
}

impl fmt::Display for BoundError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundError::OutOfRange(b) => write!(f, "threshold bound {b} lies outside [0,1]"),
            BoundError::Trivial(b) => write!(f, "trivial threshold bound {b} is not allowed"),
        }
    }
}

impl ThresholdBound {
    pub fn new(kind: BoundKind, r: Rational) -> Result<Self, BoundError> {
        let b = ThresholdBound { kind, r };
        if b.r < Rational::zero() || b.r > Rational::one() {
            return Err(BoundError::OutOfRange(alloc::format!("{b}")));
        }
        match kind {
            BoundKind::Gt if b.r.is_one() => Err(BoundError::Trivial(alloc::format!("{b}"))),
            BoundKind::Ge if b.r.is_zero() => Err(BoundError::Trivial(alloc::format!("{b}"))),
            _ => Ok(b),
        }
    }
    pub fn ge(r: Rational) -> Result<Self, BoundError> {
        Self::new(BoundKind::Ge, r)
    }
    pub fn gt(r: Rational) -> Result<Self, BoundError> {
        Self::new(BoundKind::Gt, r)
    }
    pub fn kind(&self) -> BoundKind {
        self.kind
    }
    pub fn r(&self) -> &Rational {
        &self.r
    }
    pub fn contains_rational(&self, v: &Rational) -> bool {
        match self.kind {
            BoundKind::Ge => *v >= self.r,
            BoundKind::Gt => *v > self.r,
        }
    }
    pub fn contains_f64(&self, v: f64) -> bool {
        let r = crate::rational::to_f64(&self.r);
        match self.kind {
            BoundKind::Ge => v >= r,
            BoundKind::Gt => v > r,
        }
    }
}

impl fmt::Display for ThresholdBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            BoundKind::Ge => write!(f, ">= {}", self.r),
            BoundKind::Gt => write!(f, "> {}", self.r),
        }
    }
}

/// A `{T ; U}` annotation written with state names.
#[derive(Clone, PartialEq, Eq, Debug, Hash, Default)]
pub struct NamedTU {
    pub t: Vec<String>,
    pub u: Vec<String>,
}

/// A refined-type annotation `{..;..} -> ... -> {..;..}` written with state names.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct RefinedAnnot {
    pub args: Vec<NamedTU>,
    pub result: NamedTU,
}

impl RefinedAnnot {
    pub fn erase(&self) -> SimpleType {
        SimpleType::first_order(self.args.len())
    }
    pub fn trivial(m: usize) -> Self {
        RefinedAnnot { args: alloc::vec![NamedTU::default(); m], result: NamedTU::default() }
    }
}

impl fmt::Display for NamedTU {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{} ; {}}}", self.t.join(","), self.u.join(","))
    }
}

impl fmt::Display for RefinedAnnot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in &self.args {
            write!(f, "{a}->")?;
        }
        write!(f, "{}", self.result)
    }
}

/// A bound variable together with its type annotation.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct Binder {
    pub name: String,
    pub ty: SimpleType,
    pub refined: Option<RefinedAnnot>,
}

impl Binder {
    pub fn new(name: impl Into<String>, ty: SimpleType) -> Self {
        Binder { name: name.into(), ty, refined: None }
    }
    pub fn prop(name: impl Into<String>) -> Self {
        Self::new(name, SimpleType::Prop)
    }
    pub fn refined(name: impl Into<String>, annot: RefinedAnnot) -> Self {
        Binder { name: name.into(), ty: annot.erase(), refined: Some(annot) }
    }
    pub fn renamed(&self, name: String) -> Self {
        Binder { name, ty: self.ty.clone(), refined: self.refined.clone() }
    }
}

/// PHFL formulas.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub enum Formula {
    Top,
    Bot,
    Atom(String),
    Var(String),
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Threshold(Box<Formula>, ThresholdBound),
    /// Minimum over positive-probability successors.
    Box(Box<Formula>),
    /// Maximum over positive-probability successors.
    Dia(Box<Formula>),
    /// Expected value after one step.
    Avg(Box<Formula>),
    Mu(Binder, Box<Formula>),
    Nu(Binder, Box<Formula>),
    Lam(Binder, Box<Formula>),
    App(Box<Formula>, Box<Formula>),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub enum FixKind {
    Mu,
    Nu,
}

impl Formula {
    pub fn atom(a: impl Into<String>) -> Formula {
        Formula::Atom(a.into())
    }
    pub fn var(x: impl Into<String>) -> Formula {
        Formula::Var(x.into())
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn threshold(a: Formula, b: ThresholdBound) -> Formula {
        Formula::Threshold(Box::new(a), b)
    }
    pub fn boxed(a: Formula) -> Formula {
        Formula::Box(Box::new(a))
    }
    pub fn dia(a: Formula) -> Formula {
        Formula::Dia(Box::new(a))
    }
    pub fn avg(a: Formula) -> Formula {
        Formula::Avg(Box::new(a))
    }
    pub fn mu(b: Binder, body: Formula) -> Formula {
        Formula::Mu(b, Box::new(body))
    }
    pub fn nu(b: Binder, body: Formula) -> Formula {
        Formula::Nu(b, Box::new(body))
    }
    pub fn fix(kind: FixKind, b: Binder, body: Formula) -> Formula {
        match kind {
            FixKind::Mu => Formula::mu(b, body),
            FixKind::Nu => Formula::nu(b, body),
        }
    }
    pub fn lam(b: Binder, body: Formula) -> Formula {
        Formula::Lam(b, Box::new(body))
    }
    pub fn app(f: Formula, a: Formula) -> Formula {
        Formula::App(Box::new(f), Box::new(a))
    }
    /// Left-nested application of `f` to all `args`.
    pub fn apps(f: Formula, args: impl IntoIterator<Item = Formula>) -> Formula {
        args.into_iter().fold(f, Formula::app)
    }
    /// Right-nested disjunction; `Bot` when empty.
    pub fn or_all(items: impl IntoIterator<Item = Formula>) -> Formula {
        let v: Vec<Formula> = items.into_iter().collect();
        let mut it = v.into_iter().rev();
        match it.next() {
            None => Formula::Bot,
            Some(last) => it.fold(last, |acc, x| Formula::or(x, acc)),
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Top | Formula::Bot | Formula::Atom(_) | Formula::Var(_) => Vec::new(),
            Formula::Or(a, b) | Formula::And(a, b) | Formula::App(a, b) => alloc::vec![&**a, &**b],
            Formula::Threshold(a, _) | Formula::Box(a) | Formula::Dia(a) | Formula::Avg(a) => alloc::vec![&**a],
            Formula::Mu(_, a) | Formula::Nu(_, a) | Formula::Lam(_, a) => alloc::vec![&**a],
        }
    }

    pub fn is_fixpoint(&self) -> bool {
        matches!(self, Formula::Mu(..) | Formula::Nu(..))
    }

    /// Atoms occurring in the formula, sorted and deduplicated.
    pub fn atoms(&self) -> Vec<String> {
        let mut out = Vec::new();
        fn go(f: &Formula, out: &mut Vec<String>) {
            if let Formula::Atom(a) = f {
                out.push(a.clone());
            }
            for c in f.children() {
                go(c, out);
            }
        }
        go(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// True when the formula contains a fixpoint of each kind with one nested inside the other.
    pub fn has_alternation(&self) -> bool {
        fn contains_kind(f: &Formula, want_mu: bool) -> bool {
            match f {
                Formula::Mu(..) if want_mu => true,
                Formula::Nu(..) if !want_mu => true,
                _ => f.children().iter().any(|c| contains_kind(c, want_mu)),
            }
        }
        match self {
            Formula::Mu(_, b) if contains_kind(b, false) => true,
            Formula::Nu(_, b) if contains_kind(b, true) => true,
            _ => self.children().iter().any(|c| c.has_alternation()),
        }
    }
}
