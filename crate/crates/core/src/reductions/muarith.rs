use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::rc::Rc;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::{FragmentNote, Instance, ReductionError};
use crate::formula::{Binder, Cursor, Formula, ParseError, SimpleType, ThresholdBound, Tok};
use crate::markov::MarkovChain;
use crate::rational::rat;

/// Types of the higher-order fixpoint arithmetic: `N`, `o` and arrows.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MuType {
    N,
    Omega,
    Arrow(Box<MuType>, Box<MuType>),
}

impl MuType {
    pub fn arrow(a: MuType, r: MuType) -> MuType {
        MuType::Arrow(Box::new(a), Box::new(r))
    }
    pub fn order(&self) -> usize {
        match self {
            MuType::N | MuType::Omega => 0,
            MuType::Arrow(a, r) => (a.order() + 1).max(r.order()),
        }
    }
    /// `tr(A)`: both base types become `*`.
    pub fn translate(&self) -> SimpleType {
        match self {
            MuType::N | MuType::Omega => SimpleType::Prop,
            MuType::Arrow(a, r) => SimpleType::arrow(a.translate(), r.translate()),
        }
    }
    fn returns_n(&self) -> bool {
        match self {
            MuType::N | MuType::Omega => false,
            MuType::Arrow(a, r) => **r == MuType::N || a.returns_n() || r.returns_n(),
        }
    }
}

impl fmt::Display for MuType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MuType::N => write!(f, "N"),
            MuType::Omega => write!(f, "o"),
            MuType::Arrow(a, r) if matches!(**a, MuType::Arrow(..)) => write!(f, "({a}) -> {r}"),
            MuType::Arrow(a, r) => write!(f, "{a} -> {r}"),
        }
    }
}

/// Formulas of the fixpoint arithmetic. Binder types are filled in by [`typecheck_muarith`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MuFormula {
    Zero,
    Succ(Box<MuFormula>),
    Var(String),
    Le(Box<MuFormula>, Box<MuFormula>),
    And(Box<MuFormula>, Box<MuFormula>),
    Or(Box<MuFormula>, Box<MuFormula>),
    Lam(String, Option<MuType>, Box<MuFormula>),
    App(Box<MuFormula>, Box<MuFormula>),
    Mu(String, Option<MuType>, Box<MuFormula>),
    Nu(String, Option<MuType>, Box<MuFormula>),
}

impl MuFormula {
    pub fn numeral(n: usize) -> MuFormula {
        (0..n).fold(MuFormula::Zero, |acc, _| MuFormula::Succ(Box::new(acc)))
    }
    pub fn le(a: MuFormula, b: MuFormula) -> MuFormula {
        MuFormula::Le(Box::new(a), Box::new(b))
    }
    /// `s = t` as `s <= t ∧ t <= s`.
    pub fn eq(a: MuFormula, b: MuFormula) -> MuFormula {
        MuFormula::And(Box::new(MuFormula::le(a.clone(), b.clone())), Box::new(MuFormula::le(b, a)))
    }
}

impl fmt::Display for MuFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let binder = |f: &mut fmt::Formatter<'_>, kw: &str, x: &str, t: &Option<MuType>, b: &MuFormula| match t {
            Some(t) => write!(f, "({kw} {x} : {t}. {b})"),
            None => write!(f, "({kw} {x}. {b})"),
        };
        match self {
            MuFormula::Zero => write!(f, "Z"),
            MuFormula::Succ(a) => write!(f, "(S {a})"),
            MuFormula::Var(x) => write!(f, "{x}"),
            MuFormula::Le(a, b) => write!(f, "({a} <= {b})"),
            MuFormula::And(a, b) => write!(f, "({a} /\\ {b})"),
            MuFormula::Or(a, b) => write!(f, "({a} \\/ {b})"),
            MuFormula::App(a, b) => write!(f, "({a} {b})"),
            MuFormula::Lam(x, t, b) => binder(f, "\\", x, t, b),
            MuFormula::Mu(x, t, b) => binder(f, "mu", x, t, b),
            MuFormula::Nu(x, t, b) => binder(f, "nu", x, t, b),
        }
    }
}

struct MuParser {
    cur: Cursor,
}

/// Parses the arithmetic surface syntax: `Z`, `S t`, numerals, `s <= t`, `s = t`, `/\`, `\/`,
/// `\x : A. φ`, application, `mu X : T. φ`, `nu X : T. φ`. Annotations are optional.
pub fn parse_muarith(text: &str) -> Result<MuFormula, ParseError> {
    let mut p = MuParser { cur: Cursor::new(text)? };
    let f = p.expr()?;
    if !p.cur.at_eof() {
        return Err(p.cur.error(format!("unexpected {}", p.cur.peek())));
    }
    Ok(f)
}

impl MuParser {
    fn expr(&mut self) -> Result<MuFormula, ParseError> {
        if self.cur.is_sym("\\") || self.cur.is_kw("mu") || self.cur.is_kw("nu") {
            let kind = self.cur.bump();
            let x = self.ident()?;
            let ty = if self.cur.is_sym(":") {
                self.cur.bump();
                Some(self.ty()?)
            } else {
                None
            };
            self.cur.expect_sym(".")?;
            let body = Box::new(self.expr()?);
            return Ok(match kind {
                Tok::Sym(_) => MuFormula::Lam(x, ty, body),
                Tok::Ident(k) if k == "mu" => MuFormula::Mu(x, ty, body),
                _ => MuFormula::Nu(x, ty, body),
            });
        }
        let mut lhs = self.conj()?;
        while self.cur.is_sym("\\/") {
            self.cur.bump();
            lhs = MuFormula::Or(Box::new(lhs), Box::new(self.conj()?));
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> Result<MuFormula, ParseError> {
        let mut lhs = self.cmp()?;
        while self.cur.is_sym("/\\") {
            self.cur.bump();
            lhs = MuFormula::And(Box::new(lhs), Box::new(self.cmp()?));
        }
        Ok(lhs)
    }

    fn cmp(&mut self) -> Result<MuFormula, ParseError> {
        let lhs = self.app()?;
        if self.cur.is_sym("<=") {
            self.cur.bump();
            return Ok(MuFormula::le(lhs, self.app()?));
        }
        if self.cur.is_sym("=") {
            self.cur.bump();
            return Ok(MuFormula::eq(lhs, self.app()?));
        }
        Ok(lhs)
    }

    fn starts_atom(&self) -> bool {
        match self.cur.peek() {
            Tok::Ident(x) => !matches!(x.as_str(), "mu" | "nu"),
            Tok::Num(_) => true,
            Tok::Sym(s) => *s == "(",
            Tok::Eof => false,
        }
    }

    fn app(&mut self) -> Result<MuFormula, ParseError> {
        let mut f = self.atom()?;
        while self.starts_atom() || self.cur.is_sym("\\") {
            // A trailing abstraction is the last argument.
            let arg = if self.cur.is_sym("\\") { self.expr()? } else { self.atom()? };
            f = MuFormula::App(Box::new(f), Box::new(arg));
        }
        Ok(f)
    }

    fn atom(&mut self) -> Result<MuFormula, ParseError> {
        match self.cur.peek().clone() {
            Tok::Sym("(") => {
                self.cur.bump();
                let f = self.expr()?;
                self.cur.expect_sym(")")?;
                Ok(f)
            }
            Tok::Num(s) => {
                let n: usize = s.parse().map_err(|_| self.cur.error(format!("bad numeral `{s}`")))?;
                self.cur.bump();
                Ok(MuFormula::numeral(n))
            }
            Tok::Ident(x) if x == "Z" => {
                self.cur.bump();
                Ok(MuFormula::Zero)
            }
            Tok::Ident(x) if x == "S" => {
                self.cur.bump();
                Ok(MuFormula::Succ(Box::new(self.atom()?)))
            }
            Tok::Ident(x) if !matches!(x.as_str(), "mu" | "nu") => {
                self.cur.bump();
                Ok(MuFormula::Var(x))
            }
            t => Err(self.cur.error(format!("expected a formula, found {t}"))),
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.cur.peek().clone() {
            Tok::Ident(x) if !matches!(x.as_str(), "Z" | "S" | "mu" | "nu") => {
                self.cur.bump();
                Ok(x)
            }
            t => Err(self.cur.error(format!("expected a variable, found {t}"))),
        }
    }

    fn ty(&mut self) -> Result<MuType, ParseError> {
        let a = match self.cur.peek().clone() {
            Tok::Sym("(") => {
                self.cur.bump();
                let t = self.ty()?;
                self.cur.expect_sym(")")?;
                t
            }
            Tok::Ident(x) if x == "N" => {
                self.cur.bump();
                MuType::N
            }
            Tok::Ident(x) if x == "o" || x == "O" => {
                self.cur.bump();
                MuType::Omega
            }
            t => return Err(self.cur.error(format!("expected a type, found {t}"))),
        };
        if self.cur.is_sym("->") {
            self.cur.bump();
            return Ok(MuType::arrow(a, self.ty()?));
        }
        Ok(a)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Ty {
    N,
    O,
    Arr(Box<Ty>, Box<Ty>),
    Meta(usize),
}

struct Infer {
    subst: Vec<Option<Ty>>,
}

impl Infer {
    fn fresh(&mut self) -> Ty {
        self.subst.push(None);
        Ty::Meta(self.subst.len() - 1)
    }
    fn from_annot(t: &MuType) -> Ty {
        match t {
            MuType::N => Ty::N,
            MuType::Omega => Ty::O,
            MuType::Arrow(a, r) => Ty::Arr(Box::new(Self::from_annot(a)), Box::new(Self::from_annot(r))),
        }
    }
    fn resolve(&self, t: &Ty) -> Ty {
        match t {
            Ty::Meta(v) => match &self.subst[*v] {
                Some(u) => self.resolve(u),
                None => t.clone(),
            },
            Ty::Arr(a, r) => Ty::Arr(Box::new(self.resolve(a)), Box::new(self.resolve(r))),
            _ => t.clone(),
        }
    }
    fn occurs(&self, v: usize, t: &Ty) -> bool {
        match self.resolve(t) {
            Ty::Meta(w) => v == w,
            Ty::Arr(a, r) => self.occurs(v, &a) || self.occurs(v, &r),
            _ => false,
        }
    }
    fn unify(&mut self, a: &Ty, b: &Ty) -> Result<(), String> {
        let (a, b) = (self.resolve(a), self.resolve(b));
        match (&a, &b) {
            _ if a == b => Ok(()),
            (Ty::Meta(v), t) | (t, Ty::Meta(v)) => {
                if self.occurs(*v, t) {
                    return Err(String::from("recursive type"));
                }
                self.subst[*v] = Some(t.clone());
                Ok(())
            }
            (Ty::Arr(a1, r1), Ty::Arr(a2, r2)) => {
                self.unify(a1, a2)?;
                self.unify(r1, r2)
            }
            _ => Err(format!("cannot match {} with {}", show(&a), show(&b))),
        }
    }
    fn finish(&self, t: &Ty) -> MuType {
        match self.resolve(t) {
            Ty::N => MuType::N,
            Ty::O | Ty::Meta(_) => MuType::Omega,
            Ty::Arr(a, r) => MuType::arrow(self.finish(&a), self.finish(&r)),
        }
    }

    fn infer(&mut self, env: &mut Vec<(String, Ty)>, f: &MuFormula, slots: &mut Vec<Ty>) -> Result<Ty, String> {
        let ill = |what: &str, e: String| format!("{what} `{f}`: {e}");
        match f {
            MuFormula::Zero => Ok(Ty::N),
            MuFormula::Succ(a) => {
                let t = self.infer(env, a, slots)?;
                self.unify(&t, &Ty::N).map_err(|e| ill("successor of", e))?;
                Ok(Ty::N)
            }
            MuFormula::Var(x) => env.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t.clone()).ok_or_else(|| format!("unbound variable `{x}`")),
            MuFormula::Le(a, b) => {
                for s in [a, b] {
                    let t = self.infer(env, s, slots)?;
                    self.unify(&t, &Ty::N).map_err(|e| ill("comparison", e))?;
                }
                Ok(Ty::O)
            }
            MuFormula::And(a, b) | MuFormula::Or(a, b) => {
                for s in [a, b] {
                    let t = self.infer(env, s, slots)?;
                    self.unify(&t, &Ty::O).map_err(|e| ill("connective", e))?;
                }
                Ok(Ty::O)
            }
            MuFormula::App(g, a) => {
                let tg = self.infer(env, g, slots)?;
                let ta = self.infer(env, a, slots)?;
                let r = self.fresh();
                self.unify(&tg, &Ty::Arr(Box::new(ta), Box::new(r.clone()))).map_err(|e| ill("application", e))?;
                Ok(r)
            }
            MuFormula::Lam(x, ann, body) => {
                let tx = ann.as_ref().map(Self::from_annot).unwrap_or_else(|| self.fresh());
                slots.push(tx.clone());
                env.push((x.clone(), tx.clone()));
                let tb = self.infer(env, body, slots);
                env.pop();
                Ok(Ty::Arr(Box::new(tx), Box::new(tb?)))
            }
            MuFormula::Mu(x, ann, body) | MuFormula::Nu(x, ann, body) => {
                let tx = ann.as_ref().map(Self::from_annot).unwrap_or_else(|| self.fresh());
                slots.push(tx.clone());
                env.push((x.clone(), tx.clone()));
                let tb = self.infer(env, body, slots);
                env.pop();
                self.unify(&tx, &tb?).map_err(|e| ill("fixpoint", e))?;
                Ok(tx)
            }
        }
    }
}

fn show(t: &Ty) -> String {
    match t {
        Ty::N => String::from("N"),
        Ty::O => String::from("o"),
        Ty::Arr(a, r) => format!("({} -> {})", show(a), show(r)),
        Ty::Meta(v) => format!("?{v}"),
    }
}

fn fill(f: &MuFormula, types: &mut impl Iterator<Item = MuType>) -> MuFormula {
    match f {
        MuFormula::Zero | MuFormula::Var(_) => f.clone(),
        MuFormula::Succ(a) => MuFormula::Succ(Box::new(fill(a, types))),
        MuFormula::Le(a, b) => MuFormula::Le(Box::new(fill(a, types)), Box::new(fill(b, types))),
        MuFormula::And(a, b) => MuFormula::And(Box::new(fill(a, types)), Box::new(fill(b, types))),
        MuFormula::Or(a, b) => MuFormula::Or(Box::new(fill(a, types)), Box::new(fill(b, types))),
        MuFormula::App(a, b) => MuFormula::App(Box::new(fill(a, types)), Box::new(fill(b, types))),
        MuFormula::Lam(x, _, b) | MuFormula::Mu(x, _, b) | MuFormula::Nu(x, _, b) => {
            let t = types.next();
            let b = Box::new(fill(b, types));
            match f {
                MuFormula::Lam(..) => MuFormula::Lam(x.clone(), t, b),
                MuFormula::Mu(..) => MuFormula::Mu(x.clone(), t, b),
                _ => MuFormula::Nu(x.clone(), t, b),
            }
        }
    }
}

/// Infers the type of a closed formula and fills in every binder type. Unconstrained types default
/// to `o`.
pub fn typecheck_muarith(f: &MuFormula) -> Result<(MuFormula, MuType), ReductionError> {
    let mut inf = Infer { subst: Vec::new() };
    let mut slots = Vec::new();
    let t = inf.infer(&mut Vec::new(), f, &mut slots).map_err(ReductionError::IllTyped)?;
    let types: Vec<MuType> = slots.iter().map(|s| inf.finish(s)).collect();
    for (ty, _) in types.iter().zip(0..) {
        if ty.returns_n() {
            return Err(ReductionError::IllTyped(format!("a function returns N in type {ty}")));
        }
    }
    let filled = fill(f, &mut types.clone().into_iter());
    check_fix_types(&filled)?;
    let top = inf.finish(&t);
    if top.returns_n() {
        return Err(ReductionError::IllTyped(format!("a function returns N in type {top}")));
    }
    Ok((filled, top))
}

fn check_fix_types(f: &MuFormula) -> Result<(), ReductionError> {
    match f {
        MuFormula::Mu(x, Some(MuType::N), _) | MuFormula::Nu(x, Some(MuType::N), _) => {
            Err(ReductionError::IllTyped(format!("fixpoint `{x}` has type N")))
        }
        MuFormula::Zero | MuFormula::Var(_) => Ok(()),
        MuFormula::Succ(a) => check_fix_types(a),
        MuFormula::Le(a, b) | MuFormula::And(a, b) | MuFormula::Or(a, b) | MuFormula::App(a, b) => {
            check_fix_types(a)?;
            check_fix_types(b)
        }
        MuFormula::Lam(_, _, b) | MuFormula::Mu(_, _, b) | MuFormula::Nu(_, _, b) => check_fix_types(b),
    }
}

/// The four-state chain `s0, s0', s1, s1'` that hosts the encoding.
pub fn muarith_chain() -> MarkovChain {
    let s = |x: &str| x.to_string();
    MarkovChain::new(
        alloc::vec![s("s0"), s("s0'"), s("s1"), s("s1'")],
        alloc::vec![
            (s("s0"), s("s1"), rat(1, 2)),
            (s("s0"), s("s0'"), rat(1, 2)),
            (s("s0'"), s("s0"), rat(1, 2)),
            (s("s0'"), s("s1'"), rat(1, 2)),
            (s("s1"), s("s0"), rat(1, 1)),
            (s("s1'"), s("s0'"), rat(1, 1)),
        ],
        alloc::vec![(s("p0"), alloc::vec![s("s0")]), (s("p0'"), alloc::vec![s("s0'")]), (s("p1"), alloc::vec![s("s1")]), (s("p1'"), alloc::vec![s("s1'")])],
        "s0",
    )
    .expect("fixed chain is valid")
}

const RESERVED: &[&str] = &["p0", "p0'", "p1", "p1'", "top", "bot", "box", "dia", "avg", "mu", "nu"];

fn var_name(x: &str) -> String {
    if RESERVED.contains(&x) || x.starts_with('~') {
        format!("{x}_v")
    } else {
        String::from(x)
    }
}

/// `tr(φ)`. Binder types must already be filled in.
pub fn translate(f: &MuFormula) -> Result<Formula, ReductionError> {
    let a = |x: &str| Formula::atom(x);
    let binder = |x: &str, t: &Option<MuType>| -> Result<Binder, ReductionError> {
        let t = t.as_ref().ok_or_else(|| ReductionError::IllTyped(format!("binder `{x}` has no type")))?;
        Ok(Binder::new(var_name(x), t.translate()))
    };
    Ok(match f {
        MuFormula::Zero => a("p0"),
        MuFormula::Succ(s) => Formula::avg(Formula::or(
            Formula::and(Formula::avg(translate(s)?), Formula::or(a("p1"), a("p1'"))),
            a("p0"),
        )),
        MuFormula::Le(s, t) => Formula::threshold(
            Formula::avg(Formula::or(Formula::and(Formula::avg(translate(s)?), a("p1")), Formula::and(translate(t)?, a("p0'")))),
            ThresholdBound::ge(rat(1, 2)).expect("1/2 is a valid bound"),
        ),
        MuFormula::Var(x) => Formula::var(var_name(x)),
        MuFormula::And(p, q) => Formula::and(translate(p)?, translate(q)?),
        MuFormula::Or(p, q) => Formula::or(translate(p)?, translate(q)?),
        MuFormula::App(p, q) => Formula::app(translate(p)?, translate(q)?),
        MuFormula::Lam(x, t, b) => Formula::lam(binder(x, t)?, translate(b)?),
        MuFormula::Mu(x, t, b) => Formula::mu(binder(x, t)?, translate(b)?),
        MuFormula::Nu(x, t, b) => Formula::nu(binder(x, t)?, translate(b)?),
    })
}

/// Typechecks and translates a closed formula of any type.
pub fn translate_muarith(f: &MuFormula) -> Result<(Formula, MuType), ReductionError> {
    let (typed, ty) = typecheck_muarith(f)?;
    Ok((translate(&typed)?, ty))
}

/// The instance for a closed formula of type `o`.
pub fn reduce_muarith(f: &MuFormula) -> Result<Instance, ReductionError> {
    let (formula, ty) = translate_muarith(f)?;
    if ty != MuType::Omega {
        return Err(ReductionError::IllTyped(format!("expected a formula of type o, found {ty}")));
    }
    Ok(Instance { chain: muarith_chain(), formula, fragment: FragmentNote::General })
}

/// Values of the reference evaluator.
#[derive(Clone)]
pub enum MuValue<'f> {
    Nat(u64),
    Bool(bool),
    Fun(Rc<dyn Fn(MuValue<'f>) -> MuValue<'f> + 'f>),
}

impl MuValue<'_> {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            MuValue::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

fn extreme<'f>(t: &MuType, top: bool) -> MuValue<'f> {
    match t {
        MuType::Arrow(_, r) => {
            let inner = extreme(r, top);
            MuValue::Fun(Rc::new(move |_| inner.clone()))
        }
        _ => MuValue::Bool(top),
    }
}

type MuEnv<'f> = BTreeMap<String, MuValue<'f>>;

/// Evaluates a typed closed formula with each fixpoint replaced by its `depth`-th approximant.
pub fn eval_muarith_bounded(f: &MuFormula, depth: usize) -> Result<MuValue<'_>, ReductionError> {
    eval_in(f, &BTreeMap::new(), depth)
}

fn eval_in<'f>(f: &'f MuFormula, env: &MuEnv<'f>, depth: usize) -> Result<MuValue<'f>, ReductionError> {
    let bad = |msg: &str| ReductionError::IllTyped(format!("{msg} in `{f}`"));
    Ok(match f {
        MuFormula::Zero => MuValue::Nat(0),
        MuFormula::Succ(a) => match eval_in(a, env, depth)? {
            MuValue::Nat(n) => MuValue::Nat(n + 1),
            _ => return Err(bad("successor of a non-number")),
        },
        MuFormula::Var(x) => env.get(x).cloned().ok_or_else(|| bad("unbound variable"))?,
        MuFormula::Le(a, b) => match (eval_in(a, env, depth)?, eval_in(b, env, depth)?) {
            (MuValue::Nat(x), MuValue::Nat(y)) => MuValue::Bool(x <= y),
            _ => return Err(bad("comparison of non-numbers")),
        },
        MuFormula::And(a, b) | MuFormula::Or(a, b) => {
            let (x, y) = (eval_in(a, env, depth)?, eval_in(b, env, depth)?);
            match (x.as_bool(), y.as_bool()) {
                (Some(x), Some(y)) => MuValue::Bool(if matches!(f, MuFormula::And(..)) { x && y } else { x || y }),
                _ => return Err(bad("connective on non-propositions")),
            }
        }
        MuFormula::App(g, a) => match eval_in(g, env, depth)? {
            MuValue::Fun(h) => h(eval_in(a, env, depth)?),
            _ => return Err(bad("application of a non-function")),
        },
        MuFormula::Lam(x, _, body) => {
            let env = env.clone();
            MuValue::Fun(Rc::new(move |v| {
                let mut e = env.clone();
                e.insert(x.clone(), v);
                eval_in(body, &e, depth).unwrap_or(MuValue::Bool(false))
            }))
        }
        MuFormula::Mu(x, t, body) | MuFormula::Nu(x, t, body) => {
            let t = t.as_ref().ok_or_else(|| bad("untyped fixpoint"))?;
            let mut cur = extreme(t, matches!(f, MuFormula::Nu(..)));
            for _ in 0..depth {
                let mut e = env.clone();
                e.insert(x.clone(), cur);
                cur = eval_in(body, &e, depth)?;
            }
            cur
        }
    })
}
