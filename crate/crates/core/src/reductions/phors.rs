use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use num_traits::{One, Zero};

use super::{FragmentNote, Instance, ReductionError};
use crate::formula::{Binder, Cursor, Formula, RefinedAnnot, Tok};
use crate::markov::MarkovChain;
use crate::rational::Rational;

/// `t ::= ⊤e | y | X t1 ... tk`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PTerm {
    Term,
    Param(String),
    Call(String, Vec<PTerm>),
}

impl fmt::Display for PTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PTerm::Term => write!(f, "T"),
            PTerm::Param(y) => write!(f, "{y}"),
            PTerm::Call(x, args) => {
                write!(f, "{x}")?;
                for a in args {
                    match a {
                        PTerm::Call(_, v) if !v.is_empty() => write!(f, " ({a})")?,
                        _ => write!(f, " {a}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

impl PTerm {
    fn subst(&self, map: &BTreeMap<&str, &PTerm>) -> PTerm {
        match self {
            PTerm::Term => PTerm::Term,
            PTerm::Param(y) => map.get(y.as_str()).map(|t| (*t).clone()).unwrap_or_else(|| self.clone()),
            PTerm::Call(x, args) => PTerm::Call(x.clone(), args.iter().map(|a| a.subst(map)).collect()),
        }
    }
}

/// `X y1 ... yk -> t_L ⊕_p t_R`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhorsRule {
    pub params: Vec<String>,
    pub left: PTerm,
    pub p: Rational,
    pub right: PTerm,
}

/// An order-1 probabilistic recursion scheme. `T` is the termination symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct Phors {
    arity: BTreeMap<String, usize>,
    rules: BTreeMap<String, PhorsRule>,
    start: PTerm,
}

/// Parses an applicative term. Names in `params` are parameters, all others nonterminals.
pub fn parse_pterm(text: &str, params: &[String]) -> Result<PTerm, ReductionError> {
    let mut c = Cursor::new(text).map_err(|e| ReductionError::InvalidPhors(format!("term `{text}`: {e}")))?;
    let t = app(&mut c, params).map_err(|e| ReductionError::InvalidPhors(format!("term `{text}`: {e}")))?;
    if !c.at_eof() {
        return Err(ReductionError::InvalidPhors(format!("term `{text}`: unexpected {}", c.peek())));
    }
    Ok(t)
}

fn app(c: &mut Cursor, params: &[String]) -> Result<PTerm, String> {
    let head = atom(c, params)?;
    let mut args = Vec::new();
    while matches!(c.peek(), Tok::Ident(_)) || c.is_sym("(") {
        args.push(atom(c, params)?);
    }
    if args.is_empty() {
        return Ok(head);
    }
    match head {
        PTerm::Call(x, mut a) if a.is_empty() => {
            a.extend(args);
            Ok(PTerm::Call(x, a))
        }
        PTerm::Call(x, _) => Err(format!("`{x}` is applied twice")),
        h => Err(format!("`{h}` cannot be applied (order-1 schemes have ground parameters)")),
    }
}

fn atom(c: &mut Cursor, params: &[String]) -> Result<PTerm, String> {
    match c.bump() {
        Tok::Sym("(") => {
            let t = app(c, params)?;
            if !c.is_sym(")") {
                return Err(format!("expected `)`, found {}", c.peek()));
            }
            c.bump();
            Ok(t)
        }
        Tok::Ident(x) if x == "T" => Ok(PTerm::Term),
        Tok::Ident(x) if params.contains(&x) => Ok(PTerm::Param(x)),
        Tok::Ident(x) => Ok(PTerm::Call(x, Vec::new())),
        t => Err(format!("expected a term, found {t}")),
    }
}

impl Phors {
    /// Validates arities, parameters and probabilities.
    pub fn new(arity: BTreeMap<String, usize>, rules: BTreeMap<String, PhorsRule>, start: PTerm) -> Result<Self, ReductionError> {
        let bad = |m: String| Err(ReductionError::InvalidPhors(m));
        for x in arity.keys() {
            if x == "T" {
                return bad(String::from("`T` is the termination symbol"));
            }
            if !rules.contains_key(x) {
                return bad(format!("nonterminal `{x}` has no rule"));
            }
        }
        for (x, r) in &rules {
            let Some(&k) = arity.get(x) else { return bad(format!("rule for undeclared nonterminal `{x}`")) };
            if r.params.len() != k {
                return bad(format!("rule for `{x}` has {} parameters, arity is {k}", r.params.len()));
            }
            let distinct: BTreeSet<&String> = r.params.iter().collect();
            if distinct.len() != k {
                return bad(format!("rule for `{x}` repeats a parameter"));
            }
            if r.p < Rational::zero() || r.p > Rational::one() {
                return bad(format!("probability {} of `{x}` is outside [0,1]", r.p));
            }
            for t in [&r.left, &r.right] {
                check_term(t, &arity, &r.params)?;
            }
        }
        check_term(&start, &arity, &[])?;
        Ok(Phors { arity, rules, start })
    }

    pub fn arity(&self) -> &BTreeMap<String, usize> {
        &self.arity
    }
    pub fn rules(&self) -> &BTreeMap<String, PhorsRule> {
        &self.rules
    }
    pub fn start(&self) -> &PTerm {
        &self.start
    }

    /// One reduction step of a closed term headed by a nonterminal: the two successors with
    /// their probabilities.
    pub fn step(&self, t: &PTerm) -> Option<[(Rational, PTerm); 2]> {
        let PTerm::Call(x, args) = t else { return None };
        let r = &self.rules[x];
        let map: BTreeMap<&str, &PTerm> = r.params.iter().map(String::as_str).zip(args.iter()).collect();
        Some([(r.p.clone(), r.left.subst(&map)), (Rational::one() - &r.p, r.right.subst(&map))])
    }
}

fn check_term(t: &PTerm, arity: &BTreeMap<String, usize>, params: &[String]) -> Result<(), ReductionError> {
    match t {
        PTerm::Term => Ok(()),
        PTerm::Param(y) if params.contains(y) => Ok(()),
        PTerm::Param(y) => Err(ReductionError::InvalidPhors(format!("unknown parameter `{y}`"))),
        PTerm::Call(x, args) => {
            let k = *arity.get(x).ok_or_else(|| ReductionError::InvalidPhors(format!("unknown nonterminal `{x}`")))?;
            if args.len() != k {
                return Err(ReductionError::InvalidPhors(format!(
                    "`{x}` applied to {} arguments, arity is {k} (partial application is not order 1)",
                    args.len()
                )));
            }
            args.iter().try_for_each(|a| check_term(a, arity, params))
        }
    }
}

/// Sum of `TP(G, t_G, π)` over all `π` with `|π| <= depth`, exactly.
pub fn phors_term_bound(g: &Phors, depth: usize) -> Rational {
    let mut done = Rational::zero();
    let mut frontier: BTreeMap<PTerm, Rational> = BTreeMap::new();
    frontier.insert(g.start.clone(), Rational::one());
    for step in 0..=depth {
        let mut next: BTreeMap<PTerm, Rational> = BTreeMap::new();
        for (t, p) in frontier {
            if t == PTerm::Term {
                done += p;
                continue;
            }
            if step == depth {
                continue;
            }
            if let Some(succ) = g.step(&t) {
                for (q, t2) in succ {
                    if !q.is_zero() {
                        *next.entry(t2).or_insert_with(Rational::zero) += &p * q;
                    }
                }
            }
        }
        frontier = next;
    }
    done
}

/// The probability ladder `p_1 < ... < p_m` of `{p, 1-p}` over all rules, leaving out 0 and 1.
pub fn ladder(g: &Phors) -> Vec<Rational> {
    let mut set = BTreeSet::new();
    for r in g.rules.values() {
        if !r.p.is_zero() && !r.p.is_one() {
            set.insert(r.p.clone());
            set.insert(Rational::one() - &r.p);
        }
    }
    set.into_iter().collect()
}

fn ladder_atom(i: usize) -> String {
    format!("P{i}")
}

/// `M_G`: `s0` moves to `s_i` with probability `p_i - p_{i-1}`, every other state returns to `s0`.
pub fn phors_chain(g: &Phors) -> Result<MarkovChain, ReductionError> {
    let ps = ladder(g);
    let m = ps.len();
    let states: Vec<String> = (0..=m + 1).map(|i| format!("s{i}")).collect();
    let mut trans = Vec::new();
    let mut prev = Rational::zero();
    for i in 1..=m + 1 {
        let upto = if i <= m { ps[i - 1].clone() } else { Rational::one() };
        let w = &upto - &prev;
        if !w.is_zero() {
            trans.push((states[0].clone(), states[i].clone(), w));
        }
        trans.push((states[i].clone(), states[0].clone(), Rational::one()));
        prev = upto;
    }
    let labels = (0..=m + 1).map(|i| (ladder_atom(i), alloc::vec![states[i].clone()])).collect();
    MarkovChain::new(states, trans, labels, "s0").map_err(|e| ReductionError::Chain(format!("{e}")))
}

struct Names {
    map: BTreeMap<String, String>,
}

impl Names {
    fn new(g: &Phors, m: usize) -> Self {
        let reserved: BTreeSet<String> = (0..=m + 1)
            .map(ladder_atom)
            .chain(["top", "bot", "box", "dia", "avg", "mu", "nu"].iter().map(|s| s.to_string()))
            .collect();
        let mut map = BTreeMap::new();
        let mut all: Vec<&String> = g.arity.keys().collect();
        for r in g.rules.values() {
            all.extend(r.params.iter());
        }
        for x in all {
            let mut y = x.clone();
            while reserved.contains(&y) || y.starts_with('~') {
                y.push('_');
            }
            map.insert(x.clone(), y);
        }
        Names { map }
    }
    fn get(&self, x: &str) -> String {
        self.map.get(x).cloned().unwrap_or_else(|| String::from(x))
    }
}

struct Encoder<'g> {
    g: &'g Phors,
    ps: Vec<Rational>,
    names: Names,
}

impl Encoder<'_> {
    /// `⌈t⌉` with nonterminals outside `bound` replaced by their closed forms.
    fn term(&self, t: &PTerm, bound: &[String]) -> Formula {
        match t {
            PTerm::Term => Formula::Top,
            PTerm::Param(y) => Formula::var(self.names.get(y)),
            PTerm::Call(x, args) => {
                let head = if bound.contains(x) { Formula::var(self.names.get(x)) } else { self.closed(x, bound) };
                Formula::apps(head, args.iter().map(|a| self.term(a, bound)))
            }
        }
    }

    /// `μX:{;}->..->{;}. λy. Avg((guard_L ∧ Avg ⌈t_L⌉) ∨ (guard_R ∧ Avg ⌈t_R⌉))`, nested for
    /// every nonterminal not yet bound.
    fn closed(&self, x: &str, bound: &[String]) -> Formula {
        let r = &self.g.rules[x];
        let mut inner: Vec<String> = bound.to_vec();
        inner.push(String::from(x));
        let m = self.ps.len();
        // Number of ladder states on the left branch.
        let i = if r.p.is_zero() {
            0
        } else if r.p.is_one() {
            m + 1
        } else {
            self.ps.iter().position(|q| *q == r.p).expect("p is on the ladder") + 1
        };
        let guard = |range: core::ops::RangeInclusive<usize>| Formula::or_all(range.map(|j| Formula::atom(ladder_atom(j))));
        let mut branches = Vec::new();
        if i >= 1 {
            branches.push(Formula::and(guard(1..=i), Formula::avg(self.term(&r.left, &inner))));
        }
        if i <= m {
            branches.push(Formula::and(guard(i + 1..=m + 1), Formula::avg(self.term(&r.right, &inner))));
        }
        let mut body = Formula::avg(Formula::or_all(branches));
        for y in r.params.iter().rev() {
            body = Formula::lam(Binder::prop(self.names.get(y)), body);
        }
        Formula::mu(Binder::refined(self.names.get(x), RefinedAnnot::trivial(r.params.len())), body)
    }
}

/// `(M_G, φ_G)` with `φ_G` the start term under the least solution of the rule equations.
pub fn reduce_phors(g: &Phors) -> Result<Instance, ReductionError> {
    let chain = phors_chain(g)?;
    let ps = ladder(g);
    let enc = Encoder { g, names: Names::new(g, ps.len()), ps };
    let formula = enc.term(&g.start, &[]);
    Ok(Instance { chain, formula, fragment: FragmentNote::DecidableMuOnly })
}
