//! First-order real-arithmetic characterizations of the affine semantics and SMT-LIB 2 emission.

mod block;
mod build;
mod fo;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write;

pub use block::Block;
pub use build::MAX_FREE_POSITIONS;
pub use fo::{FOFormula, FoEvalError, Term};

use build::{bounds, describe, free_fix_vars, Builder, Mode, Scope};
use crate::formula::{BoundKind, Formula};
use crate::markov::MarkovChain;
use crate::rational::Rational;
use crate::refined::{RefinedDerivation, Rule};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SmtError {
    Invalid(String),
    /// Outside the μ-only fragment.
    Fragment(String),
    NotClosed(String),
    TooLarge(String),
}

impl fmt::Display for SmtError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmtError::Invalid(s) => write!(f, "invalid derivation: {s}"),
            SmtError::Fragment(s) => write!(f, "not in the mu-only fragment: {s}"),
            SmtError::NotClosed(s) => write!(f, "{s}"),
            SmtError::TooLarge(s) => write!(f, "encoding too large: {s}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Logic {
    Nra,
    QfNra,
}

impl Logic {
    pub fn name(self) -> &'static str {
        match self {
            Logic::Nra => "NRA",
            Logic::QfNra => "QF_NRA",
        }
    }
}

/// How a `sat` answer translates into a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SatMeaning {
    Holds,
    Fails,
}

/// A declared variable and the coefficient it stands for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarInfo {
    pub name: String,
    /// Binder name for coefficient variables, a short tag for auxiliaries.
    pub owner: String,
    /// `(i, j, k)` in the coefficient tensor.
    pub slot: Option<(usize, usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct SolverQuery {
    pub logic: Logic,
    pub declared: Vec<String>,
    pub assertions: Vec<FOFormula>,
    pub meta: Vec<VarInfo>,
    /// Human-readable line per declared coefficient variable.
    pub descriptions: Vec<String>,
    pub sat_means: SatMeaning,
    pub get_model: bool,
}

impl SolverQuery {
    pub fn script(&self) -> String {
        emit_smtlib(self)
    }
    pub fn count_forall(&self) -> usize {
        self.assertions.iter().map(|f| f.count_forall()).sum()
    }
    /// Truth of all assertions and bounds at a full assignment. Fails on quantifiers.
    pub fn eval(&self, env: &BTreeMap<String, Rational>) -> Result<bool, FoEvalError> {
        if !bounds(&self.declared).eval(env)? {
            return Ok(false);
        }
        for a in &self.assertions {
            if !a.eval(env)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
    /// Verdict for a solver answer.
    pub fn verdict(&self, sat: bool) -> bool {
        match self.sat_means {
            SatMeaning::Holds => sat,
            SatMeaning::Fails => !sat,
        }
    }
    pub fn with_assertions(mut self, extra: impl IntoIterator<Item = FOFormula>) -> Self {
        self.assertions.extend(extra);
        self
    }
}

/// `Φ(c, d)`: the free blocks are the fixpoint-variable reps `c` and the result rep `d`.
#[derive(Clone, Debug)]
pub struct SemanticsFormula {
    pub phi: FOFormula,
    pub result: Block,
    pub free_blocks: Vec<(String, Block)>,
    /// Existentially quantified helpers of `phi`.
    pub internal: Vec<String>,
    pub facts: Vec<FOFormula>,
    pub meta: Vec<VarInfo>,
}

impl SemanticsFormula {
    /// Every block variable declared, `phi`'s body asserted, plus `extra`.
    pub fn query(&self, m: &MarkovChain, extra: impl IntoIterator<Item = FOFormula>) -> SolverQuery {
        let mut declared: Vec<String> = Vec::new();
        for (_, b) in &self.free_blocks {
            declared.extend(block_vars(b));
        }
        declared.extend(block_vars(&self.result));
        declared.extend(self.internal.iter().cloned());
        let mut assertions = self.facts.clone();
        assertions.extend(extra);
        finish(m, declared, assertions, self.meta.clone(), SatMeaning::Holds)
    }
}

fn block_vars(b: &Block) -> Vec<String> {
    b.canonical_slots()
        .into_iter()
        .filter_map(|(i, j, k)| match b.get(i, j, k) {
            Term::Var(x) => Some(x.clone()),
            _ => None,
        })
        .collect()
}

fn finish(m: &MarkovChain, declared: Vec<String>, assertions: Vec<FOFormula>, meta: Vec<VarInfo>, sat_means: SatMeaning) -> SolverQuery {
    let has_forall = assertions.iter().any(|f| f.count_forall() > 0);
    let descriptions = meta.iter().map(|v| describe(m, v)).collect();
    SolverQuery {
        logic: if has_forall { Logic::Nra } else { Logic::QfNra },
        declared,
        assertions,
        meta,
        descriptions,
        sat_means,
        get_model: false,
    }
}

fn top_facts(b: Builder<'_>, main: Scope) -> (Vec<String>, Vec<FOFormula>, Vec<VarInfo>) {
    let mut vars = b.hoisted.vars;
    vars.extend(main.vars);
    let mut facts = b.hoisted.facts;
    facts.extend(main.facts);
    let facts = facts.into_iter().filter(|f| *f != FOFormula::True).collect();
    (vars, facts, b.meta)
}

/// Builds `Φ` for the conclusion `λΔ.φ` of `d`.
pub fn build_semantics_formula(m: &MarkovChain, d: &RefinedDerivation) -> Result<SemanticsFormula, SmtError> {
    let mut b = Builder::new(m, Mode::Full);
    let mut main = Scope::default();
    let mut gamma = BTreeMap::new();
    let mut free_blocks = Vec::new();
    let mut outer = Scope::default();
    for (x, ty) in free_fix_vars(d) {
        let blk = b.fresh_block(&x, "c_", &ty, &mut outer)?;
        gamma.insert(x.clone(), blk.clone());
        free_blocks.push((x, blk));
    }
    let value = b.node(d, &gamma, &mut main)?;
    let result = b.fresh_block("result", "d", &value.ty().clone(), &mut outer)?;
    main.facts.push(value.equals(&result));
    let (internal, mut facts, meta) = top_facts(b, main);
    // Row bounds of the free blocks belong to Φ as well.
    facts.splice(0..0, outer.facts.into_iter().filter(|f| *f != FOFormula::True));
    let phi = FOFormula::exists(internal.clone(), FOFormula::and(core::iter::once(bounds(&internal)).chain(facts.iter().cloned())));
    Ok(SemanticsFormula { phi, result, free_blocks, internal, facts, meta })
}

fn closed_prop(d: &RefinedDerivation) -> Result<(), SmtError> {
    if !d.delta.is_empty() || !d.ty.is_prop() || !free_fix_vars(d).is_empty() {
        return Err(SmtError::NotClosed(format!("`{}` is not a closed formula of type *", d.formula)));
    }
    Ok(())
}

/// A script that is satisfiable exactly when the formula holds at the initial state.
pub fn build_model_check_query(m: &MarkovChain, d: &RefinedDerivation) -> Result<SolverQuery, SmtError> {
    closed_prop(d)?;
    let mut b = Builder::new(m, Mode::Full);
    let mut main = Scope::default();
    let value = b.node(d, &BTreeMap::new(), &mut main)?;
    main.facts.push(FOFormula::eq(value.get(m.init(), 0, 0).clone(), Term::one()));
    let (vars, facts, meta) = top_facts(b, main);
    Ok(finish(m, vars, facts, meta, SatMeaning::Holds))
}

/// Peels derivation wrappers that do not change the semantics.
fn strip(d: &RefinedDerivation) -> &RefinedDerivation {
    match d.rule {
        Rule::WeakTU | Rule::Unfold if d.premises.len() == 1 => strip(&d.premises[0]),
        _ => d,
    }
}

/// Existential script for the outermost threshold of a μ-only formula.
///
/// Satisfiable exactly when some family of prefixpoints puts the value below the bound, that is, when
/// the threshold fails. A formula with no outer threshold is read as `[φ] >= 1`.
pub fn build_mu_only_query(m: &MarkovChain, d: &RefinedDerivation) -> Result<SolverQuery, SmtError> {
    closed_prop(d)?;
    let root = strip(d);
    let (body, kind, r) = match (&root.rule, &root.formula) {
        (Rule::J, Formula::Threshold(_, j)) => (&root.premises[0], j.kind(), j.r().clone()),
        _ => (root, BoundKind::Ge, Rational::from_integer(1.into())),
    };
    let mut b = Builder::new(m, Mode::MuOnly);
    let mut main = Scope::default();
    let value = b.node(body, &BTreeMap::new(), &mut main)?;
    let v = value.get(m.init(), 0, 0).clone();
    let rt = Term::Const(r);
    main.facts.push(match kind {
        BoundKind::Ge => FOFormula::lt(v, rt),
        BoundKind::Gt => FOFormula::le(v, rt),
    });
    let (vars, facts, meta) = top_facts(b, main);
    Ok(finish(m, vars, facts, meta, SatMeaning::Fails))
}

/// The SMT-LIB 2 text of a query.
pub fn emit_smtlib(q: &SolverQuery) -> String {
    let mut s = String::new();
    let meaning = match q.sat_means {
        SatMeaning::Holds => "sat means the formula holds",
        SatMeaning::Fails => "sat means the threshold fails",
    };
    let _ = writeln!(s, "; {meaning}");
    for line in &q.descriptions {
        let _ = writeln!(s, "; {line}");
    }
    let _ = writeln!(s, "(set-logic {})", q.logic.name());
    for v in &q.declared {
        let _ = writeln!(s, "(declare-const {v} Real)");
    }
    for v in &q.declared {
        let _ = writeln!(s, "(assert (and (<= 0.0 {v}) (<= {v} 1.0)))");
    }
    let mut splits = 0;
    for a in &q.assertions {
        let (e, c) = a.expand_minmax();
        splits += c;
        let _ = writeln!(s, "(assert {e})");
    }
    if splits > 0 {
        let _ = writeln!(s, "; min/max case splits: {splits}");
    }
    let _ = writeln!(s, "(check-sat)");
    if q.get_model {
        let _ = writeln!(s, "(get-model)");
    }
    let _ = writeln!(s, "(exit)");
    s
}

/// Equalities pinning a block to the constants of a rep.
pub fn block_equals_rep(b: &Block, r: &crate::affine::AffineRep<Rational>) -> FOFormula {
    b.equals(&Block::from_rep(r))
}

#[cfg(test)]
mod tests;
