use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::block::Block;
use super::fo::{FOFormula, Term};
use super::{SmtError, VarInfo};
use crate::affine::{binder_of, node_type};
use crate::formula::{free_vars, BoundKind, Formula};
use crate::markov::MarkovChain;
use crate::rational::Rational;
use crate::refined::{RefinedDerivation, RefinedType, Rule};

/// Largest number of free argument positions per row before the vertex encoding is refused.
pub const MAX_FREE_POSITIONS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Fixpoints characterized exactly, with a universally quantified minimality clause.
    Full,
    /// Fixpoints over-approximated by prefixpoints; no quantifiers.
    MuOnly,
}

#[derive(Default, Debug)]
pub(crate) struct Scope {
    pub vars: Vec<String>,
    pub facts: Vec<FOFormula>,
}

pub(crate) struct Builder<'m> {
    pub m: &'m MarkovChain,
    rows: Vec<Vec<(usize, Rational)>>,
    mode: Mode,
    used: BTreeMap<String, usize>,
    aux: usize,
    pub meta: Vec<VarInfo>,
    pub hoisted: Scope,
    cache: BTreeMap<usize, Block>,
}

fn sanitize(x: &str) -> String {
    x.chars().map(|c| if c.is_ascii_alphanumeric() { c } else if c == '\'' { 'p' } else { '_' }).collect()
}

pub(crate) fn bounds(vars: &[String]) -> FOFormula {
    FOFormula::and(vars.iter().flat_map(|v| [FOFormula::Le(Term::zero(), Term::var(v.as_str())), FOFormula::Le(Term::var(v.as_str()), Term::one())]))
}

impl<'m> Builder<'m> {
    pub fn new(m: &'m MarkovChain, mode: Mode) -> Self {
        Builder {
            m,
            rows: m.sparse_rows::<Rational>(),
            mode,
            used: BTreeMap::new(),
            aux: 0,
            meta: Vec::new(),
            hoisted: Scope::default(),
            cache: BTreeMap::new(),
        }
    }

    /// A block of fresh variables of type `ty`; rows fixed by the result type become constants.
    pub fn fresh_block(&mut self, owner: &str, prefix: &str, ty: &RefinedType, sc: &mut Scope) -> Result<Block, SmtError> {
        let n = self.m.len();
        let mut b = Block::zero(n, ty.clone());
        if b.free_positions().len() > MAX_FREE_POSITIONS {
            return Err(SmtError::TooLarge(format!("`{owner}` has {} free argument positions", b.free_positions().len())));
        }
        let base = format!("{prefix}{}", sanitize(owner));
        let count = self.used.entry(base.clone()).or_insert(0);
        *count += 1;
        let stem = if *count == 1 { base } else { format!("{base}.{}", count) };
        for (i, j, k) in b.canonical_slots() {
            if ty.result.t.contains(i) {
                continue;
            }
            if ty.result.u.contains(i) {
                if j == 0 {
                    b.set(i, 0, 0, Term::one());
                }
                continue;
            }
            let name = format!("{stem}_{}_{j}_{k}", i + 1);
            self.meta.push(VarInfo { name: name.clone(), owner: String::from(owner), slot: Some((i, j, k)) });
            sc.vars.push(name.clone());
            b.set(i, j, k, Term::Var(name));
        }
        for i in 0..n {
            if !ty.result.t.contains(i) && !ty.result.u.contains(i) && b.m() > 0 {
                sc.facts.push(FOFormula::le(b.row_top(i), Term::one()));
            }
        }
        Ok(b)
    }

    fn aux_var(&mut self, what: &str, sc: &mut Scope) -> Term {
        self.aux += 1;
        let name = format!("a_{}", self.aux);
        self.meta.push(VarInfo { name: name.clone(), owner: String::from(what), slot: None });
        sc.vars.push(name.clone());
        Term::Var(name)
    }

    fn min_max(&mut self, a: Term, b: Term, is_min: bool, sc: &mut Scope) -> Term {
        let folded = if is_min { Term::min(a.clone(), b.clone()) } else { Term::max(a.clone(), b.clone()) };
        if !matches!(folded, Term::Min(..) | Term::Max(..)) {
            return folded;
        }
        let v = self.aux_var(if is_min { "min" } else { "max" }, sc);
        let (lo, hi) = if is_min { (a, b) } else { (b, a) };
        // min(a,b): a when a <= b, else b. max(a,b) = b when b <= a, else a.
        sc.facts.push(FOFormula::or([
            FOFormula::and([FOFormula::le(lo.clone(), hi.clone()), FOFormula::eq(v.clone(), lo.clone())]),
            FOFormula::and([FOFormula::lt(hi.clone(), lo), FOFormula::eq(v.clone(), hi)]),
        ]));
        v
    }

    pub fn node(&mut self, d: &RefinedDerivation, gamma: &BTreeMap<String, Block>, sc: &mut Scope) -> Result<Block, SmtError> {
        let n = self.m.len();
        let tag = node_type(d);
        let mismatch = |what: &str| SmtError::Invalid(format!("{} at `{}`: {what}", d.rule, d.formula));
        let indicator = |set: &crate::markov::StateSet| -> Vec<Term> {
            (0..n).map(|i| if set.contains(i) { Term::one() } else { Term::zero() }).collect()
        };
        let blk = match d.rule {
            Rule::AP => {
                let Formula::Atom(p) = &d.formula else { return Err(mismatch("expected an atom")) };
                let set = self.m.label(p).ok_or_else(|| mismatch("unknown atom"))?;
                Block::constant(tag, indicator(set))
            }
            Rule::Top => Block::constant(tag, alloc::vec![Term::one(); n]),
            Rule::Bot => Block::constant(tag, alloc::vec![Term::zero(); n]),
            Rule::Var => {
                let mut b = Block::zero(n, tag);
                for i in 0..n {
                    b.set(i, 1, i + 1, Term::one());
                }
                b.canonical()
            }
            Rule::FVar => {
                let Formula::Var(x) = &d.formula else { return Err(mismatch("expected a variable")) };
                let b = gamma.get(x).ok_or_else(|| SmtError::Invalid(format!("fixpoint variable `{x}` is unbound")))?;
                if b.ty().args != tag.args {
                    return Err(mismatch("fixpoint block has the wrong argument types"));
                }
                b.clone().with_type(tag)
            }
            Rule::WeakTU | Rule::Abs | Rule::Unfold => {
                let b = self.node(&d.premises[0], gamma, sc)?;
                if b.ty().args != tag.args {
                    return Err(mismatch("premise arguments differ"));
                }
                b.with_type(tag)
            }
            Rule::Weak => {
                let p = &d.premises[0];
                let r = self.node(p, gamma, sc)?;
                let dp = p.delta.len();
                let pos: Vec<usize> = p
                    .delta
                    .iter()
                    .map(|(x, _)| d.delta.iter().position(|(y, _)| y == x).ok_or_else(|| mismatch("premise Δ is not contained")))
                    .collect::<Result<_, _>>()?;
                let map_j = |j: usize| if j <= dp { pos[j - 1] + 1 } else { d.delta.len() + (j - dp) };
                let mut out = Block::zero(n, tag);
                for i in 0..n {
                    out.set(i, 0, 0, r.get(i, 0, 0).clone());
                    for j in 1..=r.m() {
                        for k in 1..=n {
                            out.set(i, map_j(j), k, r.get(i, j, k).clone());
                        }
                    }
                }
                out
            }
            Rule::Conj | Rule::Disj => {
                let a = self.node(&d.premises[0], gamma, sc)?;
                let b = self.node(&d.premises[1], gamma, sc)?;
                let (ta, tb) = (&d.premises[0].ty.result, &d.premises[1].ty.result);
                let conj = d.rule == Rule::Conj;
                let mut out = Block::zero(n, tag);
                let m = out.m();
                for i in 0..n {
                    let (sel_a, sel_b, fixed) = if conj {
                        (ta.u.contains(i), tb.u.contains(i), ta.t.contains(i) || tb.t.contains(i))
                    } else {
                        (ta.t.contains(i), tb.t.contains(i), ta.u.contains(i) || tb.u.contains(i))
                    };
                    let src = if sel_a {
                        Some(&b)
                    } else if sel_b {
                        Some(&a)
                    } else {
                        None
                    };
                    if let Some(src) = src {
                        for j in 0..=m {
                            for k in 0..=n {
                                out.set(i, j, k, src.get(i, j, k).clone());
                            }
                        }
                    } else if fixed {
                        out.set(i, 0, 0, if conj { Term::zero() } else { Term::one() });
                    } else if m == 0 {
                        let v = self.min_max(a.get(i, 0, 0).clone(), b.get(i, 0, 0).clone(), conj, sc);
                        out.set(i, 0, 0, v);
                    } else {
                        return Err(mismatch("side condition does not cover a state"));
                    }
                }
                out
            }
            Rule::J => {
                if self.mode == Mode::MuOnly {
                    return Err(SmtError::Fragment(format!("threshold `{}` below the outermost position", d.formula)));
                }
                let r = self.node(&d.premises[0], gamma, sc)?;
                let Formula::Threshold(_, jb) = &d.formula else { return Err(mismatch("expected a threshold")) };
                let vals: Vec<Term> = (0..n)
                    .map(|i| {
                        let v = r.get(i, 0, 0).clone();
                        let rt = Term::Const(jb.r().clone());
                        if let Some(c) = v.as_const() {
                            return if jb.contains_rational(c) { Term::one() } else { Term::zero() };
                        }
                        let t = self.aux_var("threshold", sc);
                        let (holds, fails) = match jb.kind() {
                            BoundKind::Ge => (FOFormula::le(rt.clone(), v.clone()), FOFormula::lt(v, rt)),
                            BoundKind::Gt => (FOFormula::lt(rt.clone(), v.clone()), FOFormula::le(v, rt)),
                        };
                        sc.facts.push(FOFormula::or([
                            FOFormula::and([holds, FOFormula::eq(t.clone(), Term::one())]),
                            FOFormula::and([fails, FOFormula::eq(t.clone(), Term::zero())]),
                        ]));
                        t
                    })
                    .collect();
                Block::constant(tag, vals)
            }
            Rule::Min | Rule::Max => {
                let r = self.node(&d.premises[0], gamma, sc)?;
                if r.m() != 0 {
                    return Err(mismatch("operand depends on arguments"));
                }
                let is_min = d.rule == Rule::Min;
                let mut vals = Vec::with_capacity(n);
                for i in 0..n {
                    let s = self.m.successors(i).to_vec();
                    let mut acc = r.get(s[0], 0, 0).clone();
                    for &j in &s[1..] {
                        acc = self.min_max(acc, r.get(j, 0, 0).clone(), is_min, sc);
                    }
                    vals.push(acc);
                }
                Block::constant(tag, vals)
            }
            Rule::Avg => {
                let r = self.node(&d.premises[0], gamma, sc)?;
                let mut out = Block::zero(n, tag);
                for (i, row) in self.rows.iter().enumerate() {
                    for j in 0..=r.m() {
                        for k in 0..=n {
                            let t = Term::sum(row.iter().map(|(s, p)| Term::mul(Term::Const(p.clone()), r.get(*s, j, k).clone())));
                            out.set(i, j, k, t);
                        }
                    }
                }
                out
            }
            Rule::App => {
                let f = self.node(&d.premises[0], gamma, sc)?;
                let a = self.node(&d.premises[1], gamma, sc)?;
                let dl = d.delta.len();
                if a.m() != dl || f.m() != dl + 1 + d.ty.args.len() {
                    return Err(mismatch("arities do not line up"));
                }
                let j0 = dl + 1;
                let mut out = Block::zero(n, tag);
                for i in 0..n {
                    let mut c0 = alloc::vec![f.get(i, 0, 0).clone()];
                    for k in 1..=n {
                        c0.push(Term::mul(f.get(i, j0, k).clone(), a.get(k - 1, 0, 0).clone()));
                    }
                    out.set(i, 0, 0, Term::sum(c0));
                    for j in 1..=dl {
                        for k2 in 1..=n {
                            let mut c = alloc::vec![f.get(i, j, k2).clone()];
                            for k in 1..=n {
                                c.push(Term::mul(f.get(i, j0, k).clone(), a.get(k - 1, j, k2).clone()));
                            }
                            out.set(i, j, k2, Term::sum(c));
                        }
                    }
                    for j in j0 + 1..=f.m() {
                        for k in 1..=n {
                            out.set(i, j - 1, k, f.get(i, j, k).clone());
                        }
                    }
                }
                out.canonical()
            }
            Rule::Mu | Rule::Nu => self.fixpoint(d, gamma, sc)?,
        };
        Ok(blk)
    }

    fn fixpoint(&mut self, d: &RefinedDerivation, gamma: &BTreeMap<String, Block>, sc: &mut Scope) -> Result<Block, SmtError> {
        if self.mode == Mode::MuOnly && d.rule == Rule::Nu {
            return Err(SmtError::Fragment(format!("greatest fixpoint `{}`", d.formula)));
        }
        // A fixpoint that mentions no enclosing fixpoint variable is built once, at the top.
        let closed = free_vars(&d.formula).iter().all(|x| !gamma.contains_key(x));
        let key = d as *const RefinedDerivation as usize;
        if closed {
            if let Some(b) = self.cache.get(&key) {
                return Ok(b.clone());
            }
            let mut own = Scope::default();
            let b = self.fixpoint_in(d, gamma, &mut own)?;
            self.hoisted.vars.extend(own.vars);
            self.hoisted.facts.extend(own.facts);
            self.cache.insert(key, b.clone());
            return Ok(b);
        }
        self.fixpoint_in(d, gamma, sc)
    }

    fn fixpoint_in(&mut self, d: &RefinedDerivation, gamma: &BTreeMap<String, Block>, sc: &mut Scope) -> Result<Block, SmtError> {
        let x = binder_of(d);
        let tag = node_type(d);
        let body = &d.premises[0];
        let blk = self.fresh_block(&x, "c_", &tag, sc)?;
        let mut g = gamma.clone();
        g.insert(x.clone(), blk.clone());
        let image = self.node(body, &g, sc)?.with_type(tag.clone());
        if self.mode == Mode::MuOnly {
            sc.facts.push(image.leq(&blk));
            return Ok(blk);
        }
        sc.facts.push(image.equals(&blk));
        let mut inner = Scope::default();
        let other = self.fresh_block(&x, "c_", &tag, &mut inner)?;
        g.insert(x, other.clone());
        let image2 = self.node(body, &g, &mut inner)?.with_type(tag);
        inner.facts.push(image2.equals(&other));
        let ante = FOFormula::and(core::iter::once(bounds(&inner.vars)).chain(inner.facts));
        let concl = if d.rule == Rule::Mu { blk.leq(&other) } else { other.leq(&blk) };
        sc.facts.push(FOFormula::forall(inner.vars, FOFormula::implies(ante, concl)));
        Ok(blk)
    }
}

/// Free fixpoint variables of a derivation with their representation types.
pub(crate) fn free_fix_vars(d: &RefinedDerivation) -> BTreeMap<String, RefinedType> {
    fn walk(d: &RefinedDerivation, bound: &mut Vec<String>, out: &mut BTreeMap<String, RefinedType>) {
        match (&d.rule, &d.formula) {
            (Rule::FVar, Formula::Var(x)) if !bound.contains(x) => {
                out.entry(x.clone()).or_insert_with(|| node_type(d));
            }
            (Rule::Mu | Rule::Nu, _) => {
                bound.push(binder_of(d));
                d.premises.iter().for_each(|p| walk(p, bound, out));
                bound.pop();
            }
            _ => d.premises.iter().for_each(|p| walk(p, bound, out)),
        }
    }
    let mut out = BTreeMap::new();
    walk(d, &mut Vec::new(), &mut out);
    out
}

pub(crate) fn describe(m: &MarkovChain, v: &VarInfo) -> String {
    match v.slot {
        None => format!("{}: {} helper", v.name, v.owner),
        Some((i, 0, 0)) => format!("{}: {} at {}, constant", v.name, v.owner, m.state_name(i)),
        Some((i, j, k)) => format!("{}: {} at {}, argument {j} at {}", v.name, v.owner, m.state_name(i), m.state_name(k - 1)),
    }
}

