use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::types::{PropTU, RefinedEnv, RefinedType};
use crate::formula::{free_vars, order_of, unfold_fixpoint, uniquify_binders, Binder, FixKind, Formula, SimpleType, TypeEnv};
use crate::markov::{MarkovChain, StateSet};

/// Rule names of the refined type system.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash, PartialOrd, Ord)]
pub enum Rule {
    WeakTU,
    Weak,
    AP,
    Top,
    Bot,
    Var,
    FVar,
    Conj,
    Disj,
    J,
    Min,
    Max,
    Avg,
    Mu,
    Nu,
    Abs,
    App,
    Unfold,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::WeakTU => "T-WeakTU",
            Rule::Weak => "T-Weak",
            Rule::AP => "T-AP",
            Rule::Top => "T-Top",
            Rule::Bot => "T-Bot",
            Rule::Var => "T-Var",
            Rule::FVar => "T-FVar",
            Rule::Conj => "T-Conj",
            Rule::Disj => "T-Disj",
            Rule::J => "T-J",
            Rule::Min => "T-Min",
            Rule::Max => "T-Max",
            Rule::Avg => "T-Avg",
            Rule::Mu => "T-Mu",
            Rule::Nu => "T-Nu",
            Rule::Abs => "T-Abs",
            Rule::App => "T-App",
            Rule::Unfold => "T-Unfold",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A derivation tree for `Γ;Δ ⊢ φ : κ`. `Γ` is implicit: it is fixed by the enclosing fixpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinedDerivation {
    pub rule: Rule,
    pub delta: Vec<(String, PropTU)>,
    pub formula: Formula,
    pub ty: RefinedType,
    pub premises: Vec<RefinedDerivation>,
}

impl RefinedDerivation {
    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(|p| p.size()).sum::<usize>()
    }

    /// How often each rule is used.
    pub fn rule_counts(&self) -> BTreeMap<Rule, usize> {
        let mut out = BTreeMap::new();
        fn go(d: &RefinedDerivation, out: &mut BTreeMap<Rule, usize>) {
            *out.entry(d.rule).or_insert(0) += 1;
            for p in &d.premises {
                go(p, out);
            }
        }
        go(self, &mut out);
        out
    }

    /// Indented tree, one judgment per line, cut off below `max_depth`.
    pub fn render(&self, m: &MarkovChain, max_depth: usize) -> String {
        let mut s = String::new();
        self.render_into(m, 0, max_depth, &mut s);
        s
    }

    fn render_into(&self, m: &MarkovChain, depth: usize, max_depth: usize, s: &mut String) {
        for _ in 0..depth {
            s.push_str("  ");
        }
        let delta: Vec<String> = self.delta.iter().map(|(x, tu)| format!("{x}:{}", tu.display(m))).collect();
        let mut phi = self.formula.to_string();
        if phi.chars().count() > 60 {
            phi = phi.chars().take(57).collect::<String>() + "...";
        }
        s.push_str(&format!("{} [{}] |- {} : {}\n", self.rule, delta.join(", "), phi, self.ty.display(m)));
        if depth + 1 > max_depth {
            if !self.premises.is_empty() {
                for _ in 0..=depth {
                    s.push_str("  ");
                }
                s.push_str("...\n");
            }
            return;
        }
        for p in &self.premises {
            p.render_into(m, depth + 1, max_depth, s);
        }
    }
}

/// A refined typing failure, naming the rule whose side condition broke.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefineError {
    pub rule: &'static str,
    pub subformula: String,
    pub msg: String,
}

impl fmt::Display for RefineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed at `{}`: {}", self.rule, self.subformula, self.msg)
    }
}

fn fail<T>(rule: Rule, phi: &Formula, msg: String) -> Result<T, RefineError> {
    Err(RefineError { rule: rule.name(), subformula: phi.to_string(), msg })
}

/// Options for the checker.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RefineConfig {
    /// How many nested uses of the unfolding rule are allowed. Zero disables it.
    pub unfold_budget: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig { unfold_budget: 0 }
    }
}

struct Checker<'m> {
    m: &'m MarkovChain,
    gamma: BTreeMap<String, RefinedType>,
    delta: Vec<(String, PropTU)>,
    unfold_budget: usize,
    /// Every fixpoint variable is typed `<∅,∅>` (order-0 embedding).
    trivial: bool,
}

impl<'m> Checker<'m> {
    fn n(&self) -> usize {
        self.m.len()
    }

    /// Entries of the current `Δ` that occur free in `phi`, in order.
    fn min_delta(&self, phi: &Formula) -> Vec<(String, PropTU)> {
        let fv = free_vars(phi);
        self.delta.iter().filter(|(x, _)| fv.contains(x)).cloned().collect()
    }

    fn weaken(&self, d: RefinedDerivation, target: &[(String, PropTU)]) -> RefinedDerivation {
        if d.delta == target {
            return d;
        }
        RefinedDerivation {
            rule: Rule::Weak,
            delta: target.to_vec(),
            formula: d.formula.clone(),
            ty: d.ty.clone(),
            premises: alloc::vec![d],
        }
    }

    /// `T-WeakTU` down to `target`, or an error naming `ctx`.
    fn subsume(&self, d: RefinedDerivation, target: &RefinedType, ctx: Rule) -> Result<RefinedDerivation, RefineError> {
        if d.ty == *target {
            return Ok(d);
        }
        if d.ty.args != target.args {
            return fail(
                ctx,
                &d.formula,
                format!("has type {} but {} is required", d.ty.display(self.m), target.display(self.m)),
            );
        }
        if !target.is_prop() || !d.ty.result.entails(&target.result) {
            return fail(
                ctx,
                &d.formula,
                format!(
                    "inferred {} does not entail the required {}",
                    d.ty.display(self.m),
                    target.display(self.m)
                ),
            );
        }
        Ok(RefinedDerivation {
            rule: Rule::WeakTU,
            delta: d.delta.clone(),
            formula: d.formula.clone(),
            ty: target.clone(),
            premises: alloc::vec![d],
        })
    }

    fn leaf(&self, rule: Rule, phi: &Formula, delta: Vec<(String, PropTU)>, ty: RefinedType) -> RefinedDerivation {
        RefinedDerivation { rule, delta, formula: phi.clone(), ty, premises: Vec::new() }
    }

    fn prop_of(&self, d: &RefinedDerivation, rule: Rule, parent: &Formula) -> Result<PropTU, RefineError> {
        if !d.ty.is_prop() {
            return fail(rule, parent, format!("operand `{}` is not a proposition", d.formula));
        }
        Ok(d.ty.result.clone())
    }

    fn infer(&mut self, phi: &Formula) -> Result<RefinedDerivation, RefineError> {
        let n = self.n();
        match phi {
            Formula::Top => {
                Ok(self.leaf(Rule::Top, phi, Vec::new(), RefinedType::prop(PropTU::new(StateSet::empty(n), StateSet::full(n)))))
            }
            Formula::Bot => {
                Ok(self.leaf(Rule::Bot, phi, Vec::new(), RefinedType::prop(PropTU::new(StateSet::full(n), StateSet::empty(n)))))
            }
            Formula::Atom(p) => match self.m.label(p) {
                Some(set) => Ok(self.leaf(
                    Rule::AP,
                    phi,
                    Vec::new(),
                    RefinedType::prop(PropTU::new(set.complement(), set.clone())),
                )),
                None => fail(Rule::AP, phi, format!("atom `{p}` is not a label of the chain")),
            },
            Formula::Var(x) => {
                if let Some((_, tu)) = self.delta.iter().find(|(y, _)| y == x) {
                    let tu = tu.clone();
                    return Ok(self.leaf(Rule::Var, phi, alloc::vec![(x.clone(), tu.clone())], RefinedType::prop(tu)));
                }
                match self.gamma.get(x) {
                    Some(k) => Ok(self.leaf(Rule::FVar, phi, Vec::new(), k.clone())),
                    None => fail(Rule::Var, phi, format!("unbound variable `{x}`")),
                }
            }
            Formula::And(a, b) | Formula::Or(a, b) => {
                let conj = matches!(phi, Formula::And(..));
                let rule = if conj { Rule::Conj } else { Rule::Disj };
                let da = self.infer(a)?;
                let db = self.infer(b)?;
                let ta = self.prop_of(&da, rule, phi)?;
                let tb = self.prop_of(&db, rule, phi)?;
                let delta = self.min_delta(phi);
                if !delta.is_empty() {
                    let cover = ta.t.union(&ta.u).union(&tb.t).union(&tb.u);
                    if !cover.is_full() {
                        let missing = self.m.set_names(&cover.complement()).join(",");
                        return fail(
                            rule,
                            phi,
                            format!(
                                "side condition violated: Δ is non-empty but T1∪U1∪T2∪U2 misses states {{{missing}}}"
                            ),
                        );
                    }
                }
                let res = if conj {
                    PropTU::new(ta.t.union(&tb.t), ta.u.intersection(&tb.u))
                } else {
                    PropTU::new(ta.t.intersection(&tb.t), ta.u.union(&tb.u))
                };
                let premises = alloc::vec![self.weaken(da, &delta), self.weaken(db, &delta)];
                Ok(RefinedDerivation { rule, delta, formula: phi.clone(), ty: RefinedType::prop(res), premises })
            }
            Formula::Threshold(a, _) | Formula::Box(a) | Formula::Dia(a) => {
                let rule = match phi {
                    Formula::Threshold(..) => Rule::J,
                    Formula::Box(_) => Rule::Min,
                    _ => Rule::Max,
                };
                let da = self.infer(a)?;
                let ta = self.prop_of(&da, rule, phi)?;
                if !da.delta.is_empty() {
                    let names: Vec<&str> = da.delta.iter().map(|(x, _)| x.as_str()).collect();
                    return fail(
                        rule,
                        phi,
                        format!("requires Δ=∅ but the operand depends on λ-variables {}", names.join(", ")),
                    );
                }
                let res = match rule {
                    Rule::J => ta,
                    Rule::Min => PropTU::new(self.m.pre_exists(&ta.t), self.m.pre_forall(&ta.u)),
                    _ => PropTU::new(self.m.pre_forall(&ta.t), self.m.pre_exists(&ta.u)),
                };
                Ok(RefinedDerivation {
                    rule,
                    delta: Vec::new(),
                    formula: phi.clone(),
                    ty: RefinedType::prop(res),
                    premises: alloc::vec![da],
                })
            }
            Formula::Avg(a) => {
                let da = self.infer(a)?;
                let ta = self.prop_of(&da, Rule::Avg, phi)?;
                let res = PropTU::new(self.m.pre_forall(&ta.t), self.m.pre_forall(&ta.u));
                Ok(RefinedDerivation {
                    rule: Rule::Avg,
                    delta: da.delta.clone(),
                    formula: phi.clone(),
                    ty: RefinedType::prop(res),
                    premises: alloc::vec![da],
                })
            }
            Formula::Mu(b, body) | Formula::Nu(b, body) => {
                let kind = if matches!(phi, Formula::Mu(..)) { FixKind::Mu } else { FixKind::Nu };
                self.fixpoint(phi, kind, b, body, None)
            }
            Formula::Lam(b, body) => {
                let tu = self.lam_binder_type(phi, b, None)?;
                self.abs(phi, b, body, tu, None)
            }
            Formula::App(f, a) => {
                let df = match &**f {
                    // An unannotated redex takes its parameter type from the argument.
                    Formula::Lam(b, body) if b.refined.is_none() && b.ty == SimpleType::Prop => {
                        let da = self.infer(a)?;
                        let tu = self.prop_of(&da, Rule::App, phi)?;
                        self.abs(f, b, body, tu, None)?
                    }
                    _ => self.infer(f)?,
                };
                if df.ty.is_prop() {
                    return fail(Rule::App, phi, format!("`{f}` is applied but has a proposition type"));
                }
                let arg = RefinedType::prop(df.ty.args[0].clone());
                let da = self.check(a, &arg, Rule::App)?;
                let delta = self.min_delta(phi);
                let ty = df.ty.tail();
                let premises = alloc::vec![self.weaken(df, &delta), self.weaken(da, &delta)];
                Ok(RefinedDerivation { rule: Rule::App, delta, formula: phi.clone(), ty, premises })
            }
        }
    }

    fn lam_binder_type(&self, phi: &Formula, b: &Binder, expected: Option<&PropTU>) -> Result<PropTU, RefineError> {
        if b.ty != SimpleType::Prop {
            return fail(Rule::Abs, phi, format!("λ-parameter `{}` has type {}; only * parameters are allowed", b.name, b.ty));
        }
        match &b.refined {
            Some(annot) => {
                let k = RefinedType::from_annot(self.m, annot).map_err(|msg| RefineError {
                    rule: Rule::Abs.name(),
                    subformula: phi.to_string(),
                    msg,
                })?;
                if !k.is_prop() {
                    return fail(Rule::Abs, phi, format!("λ-parameter `{}` must have a {{T;U}} type", b.name));
                }
                if let Some(e) = expected {
                    if *e != k.result {
                        return fail(
                            Rule::Abs,
                            phi,
                            format!(
                                "parameter annotated {} but {} is required",
                                k.result.display(self.m),
                                e.display(self.m)
                            ),
                        );
                    }
                }
                Ok(k.result)
            }
            None => Ok(expected.cloned().unwrap_or_else(|| PropTU::trivial(self.n()))),
        }
    }

    /// `T-Abs` with parameter type `tu`; the body is checked against `expected` when given.
    fn abs(
        &mut self,
        phi: &Formula,
        b: &Binder,
        body: &Formula,
        tu: PropTU,
        expected: Option<&RefinedType>,
    ) -> Result<RefinedDerivation, RefineError> {
        self.delta.push((b.name.clone(), tu.clone()));
        let db = match expected {
            Some(k) => self.check(body, k, Rule::Abs),
            None => self.infer(body),
        };
        self.delta.pop();
        let db = db?;
        let delta = self.min_delta(phi);
        let mut inner = delta.clone();
        inner.push((b.name.clone(), tu.clone()));
        let ty = RefinedType::arrow(tu, db.ty.clone());
        Ok(RefinedDerivation {
            rule: Rule::Abs,
            delta,
            formula: phi.clone(),
            ty,
            premises: alloc::vec![self.weaken(db, &inner)],
        })
    }

    fn check(&mut self, phi: &Formula, k: &RefinedType, ctx: Rule) -> Result<RefinedDerivation, RefineError> {
        match phi {
            Formula::Lam(b, body) if !k.is_prop() => {
                let tu = self.lam_binder_type(phi, b, Some(&k.args[0]))?;
                self.abs(phi, b, body, tu, Some(&k.tail()))
            }
            Formula::Mu(b, body) | Formula::Nu(b, body) if b.refined.is_none() && !self.trivial => {
                let kind = if matches!(phi, Formula::Mu(..)) { FixKind::Mu } else { FixKind::Nu };
                let shape_ok = match kind {
                    FixKind::Mu => k.result.u.is_empty(),
                    FixKind::Nu => k.result.t.is_empty(),
                };
                let arity_ok = b.ty.first_order_arity() == Some(k.arity());
                let d = if shape_ok && arity_ok {
                    self.fixpoint(phi, kind, b, body, Some(k))?
                } else {
                    self.infer(phi)?
                };
                self.subsume(d, k, ctx)
            }
            _ => {
                let d = self.infer(phi)?;
                self.subsume(d, k, ctx)
            }
        }
    }

    /// Type of a fixpoint binder: annotation, expected type, or the largest one found by descending iteration.
    fn fixpoint(
        &mut self,
        phi: &Formula,
        kind: FixKind,
        b: &Binder,
        body: &Formula,
        expected: Option<&RefinedType>,
    ) -> Result<RefinedDerivation, RefineError> {
        let rule = match kind {
            FixKind::Mu => Rule::Mu,
            FixKind::Nu => Rule::Nu,
        };
        let n = self.n();
        let arity = match b.ty.first_order_arity() {
            Some(a) => a,
            None => {
                return fail(rule, phi, format!("fixpoint variable `{}` has type {}; only first-order types are allowed", b.name, b.ty))
            }
        };
        let annotated = match (&b.refined, self.trivial) {
            (_, true) => Some(RefinedType::trivial(n, arity)),
            (Some(a), false) => {
                let k = RefinedType::from_annot(self.m, a).map_err(|msg| RefineError {
                    rule: rule.name(),
                    subformula: phi.to_string(),
                    msg,
                })?;
                if k.arity() != arity {
                    return fail(rule, phi, format!("refined annotation {} does not match the simple type {}", k.display(self.m), b.ty));
                }
                Some(k)
            }
            (None, false) => expected.cloned(),
        };
        if let Some(k) = &annotated {
            let ok = match kind {
                FixKind::Mu => k.result.u.is_empty(),
                FixKind::Nu => k.result.t.is_empty(),
            };
            if !ok {
                let shape = if kind == FixKind::Mu { "<T,∅>" } else { "<∅,U>" };
                return fail(rule, phi, format!("type {} must end in {shape}", k.display(self.m)));
            }
        }
        // Λ-variables inside a fixpoint: surface body errors first, then reject.
        let captured = self.min_delta(phi);
        if !captured.is_empty() {
            let k = annotated.clone().unwrap_or_else(|| RefinedType::trivial(n, arity));
            self.with_fix_var(&b.name, k.clone(), |c| c.check(body, &k, rule))?;
            let names: Vec<&str> = captured.iter().map(|(x, _)| x.as_str()).collect();
            let y = names.join(" ");
            return fail(
                rule,
                phi,
                format!(
                    "requires Δ=∅ but the body uses λ-variables {}; abstract them, as in (mu {x}'. \\{y}. [{x}' {y}/{x}]body) {y}",
                    names.join(", "),
                    x = b.name
                ),
            );
        }
        let k = match annotated {
            Some(k) => k,
            None => self.largest_fix_type(kind, b, body, arity)?,
        };
        let db = self.with_fix_var(&b.name, k.clone(), |c| c.check(body, &k, rule))?;
        let d = RefinedDerivation { rule, delta: Vec::new(), formula: phi.clone(), ty: k, premises: alloc::vec![db] };
        if self.unfold_budget > 0 && !self.trivial {
            if let Some(u) = self.try_unfold(phi, &d) {
                return Ok(u);
            }
        }
        Ok(d)
    }

    fn with_fix_var<T>(&mut self, x: &str, k: RefinedType, f: impl FnOnce(&mut Self) -> T) -> T {
        let old = self.gamma.insert(String::from(x), k);
        let r = f(self);
        match old {
            Some(o) => {
                self.gamma.insert(String::from(x), o);
            }
            None => {
                self.gamma.remove(x);
            }
        }
        r
    }

    /// Descends from the most informative candidate until the body reproduces it.
    fn largest_fix_type(&mut self, kind: FixKind, b: &Binder, body: &Formula, arity: usize) -> Result<RefinedType, RefineError> {
        let n = self.n();
        let args = alloc::vec![PropTU::trivial(n); arity];
        let mut cur = match kind {
            FixKind::Mu => PropTU::new(StateSet::full(n), StateSet::empty(n)),
            FixKind::Nu => PropTU::new(StateSet::empty(n), StateSet::full(n)),
        };
        loop {
            let k = RefinedType { args: args.clone(), result: cur.clone() };
            let leaf = self.with_fix_var(&b.name, k, |c| c.infer_leaf(body, &args))?;
            let next = match kind {
                FixKind::Mu => PropTU::new(cur.t.intersection(&leaf.t), StateSet::empty(n)),
                FixKind::Nu => PropTU::new(StateSet::empty(n), cur.u.intersection(&leaf.u)),
            };
            if next == cur {
                return Ok(RefinedType { args, result: cur });
            }
            cur = next;
        }
    }

    /// Result `<T,U>` of `phi` once its parameters are bound to `args`.
    fn infer_leaf(&mut self, phi: &Formula, args: &[PropTU]) -> Result<PropTU, RefineError> {
        if args.is_empty() {
            let d = self.infer(phi)?;
            return self.prop_of(&d, Rule::Mu, phi);
        }
        match phi {
            Formula::Lam(b, body) => {
                let tu = self.lam_binder_type(phi, b, Some(&args[0]))?;
                self.delta.push((b.name.clone(), tu));
                let r = self.infer_leaf(body, &args[1..]);
                self.delta.pop();
                r
            }
            _ => {
                let d = self.infer(phi)?;
                if d.ty.args != args {
                    return fail(
                        Rule::Mu,
                        phi,
                        format!("body has type {} which does not take the fixpoint's arguments", d.ty.display(self.m)),
                    );
                }
                Ok(d.ty.result)
            }
        }
    }

    fn try_unfold(&mut self, phi: &Formula, d: &RefinedDerivation) -> Option<RefinedDerivation> {
        let unfolded = unfold_fixpoint(phi).ok()?;
        self.unfold_budget -= 1;
        let r = self.infer(&unfolded);
        self.unfold_budget += 1;
        let du = r.ok()?;
        let better = du.ty.args == d.ty.args && du.ty.result.entails(&d.ty.result) && du.ty.result != d.ty.result;
        if !better {
            return None;
        }
        Some(RefinedDerivation {
            rule: Rule::Unfold,
            delta: du.delta.clone(),
            formula: phi.clone(),
            ty: du.ty.clone(),
            premises: alloc::vec![du],
        })
    }
}

fn prepare(env: &RefinedEnv, phi: &Formula) -> Result<Formula, RefineError> {
    let dom: BTreeSet<String> = env.delta.iter().map(|(x, _)| x.clone()).collect();
    if let Some(x) = env.gamma.keys().find(|x| dom.contains(*x)) {
        return fail(Rule::Var, phi, format!("`{x}` is bound in both Γ and Δ"));
    }
    let mut tenv = TypeEnv::new();
    for (x, k) in &env.gamma {
        tenv.insert(x.clone(), k.erase());
    }
    for x in &dom {
        tenv.insert(x.clone(), SimpleType::Prop);
    }
    if let Err(e) = crate::formula::simple_typecheck(&tenv, phi) {
        return Err(RefineError { rule: "simple typing", subformula: e.subformula, msg: e.msg });
    }
    let mut avoid: BTreeSet<String> = env.gamma.keys().cloned().collect();
    avoid.extend(dom);
    Ok(uniquify_binders(phi, &avoid))
}

fn checker<'m>(m: &'m MarkovChain, env: &RefinedEnv, cfg: RefineConfig, trivial: bool) -> Checker<'m> {
    Checker { m, gamma: env.gamma.clone(), delta: env.delta.clone(), unfold_budget: cfg.unfold_budget, trivial }
}

/// A derivation of `Γ;Δ ⊢ φ : κ`. Binders are renamed apart first.
pub fn check_refined(
    m: &MarkovChain,
    env: &RefinedEnv,
    phi: &Formula,
    kappa: &RefinedType,
) -> Result<RefinedDerivation, RefineError> {
    check_refined_with(m, env, phi, kappa, RefineConfig::default())
}

pub fn check_refined_with(
    m: &MarkovChain,
    env: &RefinedEnv,
    phi: &Formula,
    kappa: &RefinedType,
    cfg: RefineConfig,
) -> Result<RefinedDerivation, RefineError> {
    let phi = prepare(env, phi)?;
    let mut c = checker(m, env, cfg, false);
    let d = c.check(&phi, kappa, Rule::WeakTU)?;
    Ok(c.weaken(d, &env.delta))
}

/// The most informative type found by the bottom-up strategy, with its derivation.
pub fn infer_refined(
    m: &MarkovChain,
    env: &RefinedEnv,
    phi: &Formula,
) -> Result<(RefinedType, RefinedDerivation), RefineError> {
    infer_refined_with(m, env, phi, RefineConfig::default())
}

pub fn infer_refined_with(
    m: &MarkovChain,
    env: &RefinedEnv,
    phi: &Formula,
    cfg: RefineConfig,
) -> Result<(RefinedType, RefinedDerivation), RefineError> {
    let phi = prepare(env, phi)?;
    let mut c = checker(m, env, cfg, false);
    let d = c.infer(&phi)?;
    let d = c.weaken(d, &env.delta);
    Ok((d.ty.clone(), d))
}

/// Order-0 formulas type at `<∅,∅>` with every fixpoint variable at `<∅,∅>`.
pub fn check_mup_embedding(m: &MarkovChain, phi: &Formula) -> Result<RefinedDerivation, RefineError> {
    match order_of(phi, &TypeEnv::new()) {
        Ok(0) => {}
        Ok(k) => return fail(Rule::Mu, phi, format!("formula has order {k}; the embedding needs order 0")),
        Err(e) => return Err(RefineError { rule: "simple typing", subformula: e.subformula, msg: e.msg }),
    }
    let env = RefinedEnv::default();
    let phi = prepare(&env, phi)?;
    let mut c = checker(m, &env, RefineConfig::default(), true);
    let d = c.infer(&phi)?;
    c.subsume(d, &RefinedType::trivial(m.len(), 0), Rule::WeakTU)
}

/// Re-checks every node of a derivation against its rule. Used as an independent oracle.
pub fn validate_derivation(m: &MarkovChain, gamma: &BTreeMap<String, RefinedType>, d: &RefinedDerivation) -> Result<(), String> {
    let mut gamma = gamma.clone();
    validate(m, &mut gamma, d)
}

fn validate(m: &MarkovChain, gamma: &mut BTreeMap<String, RefinedType>, d: &RefinedDerivation) -> Result<(), String> {
    let n = m.len();
    let here = |msg: &str| Err(format!("{} at `{}`: {msg}", d.rule, d.formula));
    let prem = |i: usize| -> &RefinedDerivation { &d.premises[i] };
    let expect_premises = |k: usize| -> Result<(), String> {
        if d.premises.len() != k {
            return Err(format!("{} at `{}`: expected {k} premises", d.rule, d.formula));
        }
        Ok(())
    };
    let prop = |t: &RefinedType| -> Result<PropTU, String> {
        if t.is_prop() {
            Ok(t.result.clone())
        } else {
            Err(format!("{} at `{}`: operand not a proposition", d.rule, d.formula))
        }
    };
    for (_, tu) in &d.delta {
        if !tu.t.is_disjoint(&tu.u) {
            return here("Δ entry with overlapping T and U");
        }
    }
    if !d.ty.result.t.is_disjoint(&d.ty.result.u) || d.ty.args.iter().any(|a| !a.t.is_disjoint(&a.u)) {
        return here("type with overlapping T and U");
    }
    match d.rule {
        Rule::WeakTU => {
            expect_premises(1)?;
            let p = prem(0);
            if p.delta != d.delta || p.formula != d.formula || !d.ty.is_prop() || !prop(&p.ty)?.entails(&d.ty.result) {
                return here("conclusion is not a weakening of the premise");
            }
        }
        Rule::Weak => {
            expect_premises(1)?;
            let p = prem(0);
            let sub = p.delta.iter().all(|e| d.delta.contains(e));
            if p.formula != d.formula || p.ty != d.ty || !sub || d.delta.len() <= p.delta.len() {
                return here("conclusion does not extend the premise's Δ");
            }
            let fv = free_vars(&d.formula);
            if d.delta.iter().any(|(x, _)| fv.contains(x) && !p.delta.iter().any(|(y, _)| y == x)) {
                return here("weakened variable occurs free");
            }
        }
        Rule::AP => {
            expect_premises(0)?;
            let Formula::Atom(p) = &d.formula else { return here("not an atom") };
            let Some(set) = m.label(p) else { return here("unknown atom") };
            if !d.delta.is_empty() || d.ty != RefinedType::prop(PropTU::new(set.complement(), set.clone())) {
                return here("wrong atom type");
            }
        }
        Rule::Top | Rule::Bot => {
            expect_premises(0)?;
            let want = if d.rule == Rule::Top {
                (Formula::Top, PropTU::new(StateSet::empty(n), StateSet::full(n)))
            } else {
                (Formula::Bot, PropTU::new(StateSet::full(n), StateSet::empty(n)))
            };
            if d.formula != want.0 || !d.delta.is_empty() || d.ty != RefinedType::prop(want.1) {
                return here("wrong constant type");
            }
        }
        Rule::Var => {
            expect_premises(0)?;
            let Formula::Var(x) = &d.formula else { return here("not a variable") };
            if d.delta.len() != 1 || d.delta[0].0 != *x || RefinedType::prop(d.delta[0].1.clone()) != d.ty {
                return here("Δ must be exactly the variable");
            }
        }
        Rule::FVar => {
            expect_premises(0)?;
            let Formula::Var(x) = &d.formula else { return here("not a variable") };
            if !d.delta.is_empty() || gamma.get(x) != Some(&d.ty) {
                return here("type differs from Γ");
            }
        }
        Rule::Conj | Rule::Disj => {
            expect_premises(2)?;
            let (a, b) = match (&d.formula, d.rule) {
                (Formula::And(a, b), Rule::Conj) | (Formula::Or(a, b), Rule::Disj) => (a, b),
                _ => return here("connective mismatch"),
            };
            let (pa, pb) = (prem(0), prem(1));
            if pa.formula != **a || pb.formula != **b || pa.delta != d.delta || pb.delta != d.delta {
                return here("premises do not match");
            }
            let (ta, tb) = (prop(&pa.ty)?, prop(&pb.ty)?);
            if !d.delta.is_empty() && !ta.t.union(&ta.u).union(&tb.t).union(&tb.u).is_full() {
                return here("side condition T1∪U1∪T2∪U2 = S violated");
            }
            let want = if d.rule == Rule::Conj {
                PropTU::new(ta.t.union(&tb.t), ta.u.intersection(&tb.u))
            } else {
                PropTU::new(ta.t.intersection(&tb.t), ta.u.union(&tb.u))
            };
            if d.ty != RefinedType::prop(want) {
                return here("wrong result type");
            }
        }
        Rule::J | Rule::Min | Rule::Max | Rule::Avg => {
            expect_premises(1)?;
            let a = match (&d.formula, d.rule) {
                (Formula::Threshold(a, _), Rule::J)
                | (Formula::Box(a), Rule::Min)
                | (Formula::Dia(a), Rule::Max)
                | (Formula::Avg(a), Rule::Avg) => a,
                _ => return here("operator mismatch"),
            };
            let p = prem(0);
            if p.formula != **a || p.delta != d.delta {
                return here("premise does not match");
            }
            if d.rule != Rule::Avg && !d.delta.is_empty() {
                return here("requires Δ=∅");
            }
            let t = prop(&p.ty)?;
            let want = match d.rule {
                Rule::J => t,
                Rule::Min => PropTU::new(m.pre_exists(&t.t), m.pre_forall(&t.u)),
                Rule::Max => PropTU::new(m.pre_forall(&t.t), m.pre_exists(&t.u)),
                _ => PropTU::new(m.pre_forall(&t.t), m.pre_forall(&t.u)),
            };
            if d.ty != RefinedType::prop(want) {
                return here("wrong transfer");
            }
        }
        Rule::Mu | Rule::Nu => {
            expect_premises(1)?;
            let (b, body) = match (&d.formula, d.rule) {
                (Formula::Mu(b, body), Rule::Mu) | (Formula::Nu(b, body), Rule::Nu) => (b, body),
                _ => return here("fixpoint kind mismatch"),
            };
            if !d.delta.is_empty() {
                return here("requires Δ=∅");
            }
            let shape = if d.rule == Rule::Mu { d.ty.result.u.is_empty() } else { d.ty.result.t.is_empty() };
            if !shape {
                return here("type has the wrong final shape");
            }
            let p = prem(0);
            if p.formula != **body || p.ty != d.ty || !p.delta.is_empty() {
                return here("premise does not match");
            }
            let old = gamma.insert(b.name.clone(), d.ty.clone());
            let r = validate(m, gamma, p);
            match old {
                Some(o) => {
                    gamma.insert(b.name.clone(), o);
                }
                None => {
                    gamma.remove(&b.name);
                }
            }
            return r;
        }
        Rule::Abs => {
            expect_premises(1)?;
            let Formula::Lam(b, body) = &d.formula else { return here("not an abstraction") };
            let p = prem(0);
            let Some(((x, tu), rest)) = p.delta.split_last() else { return here("premise Δ is empty") };
            if *x != b.name || rest != d.delta.as_slice() || p.formula != **body {
                return here("premise does not match");
            }
            if d.ty != RefinedType::arrow(tu.clone(), p.ty.clone()) {
                return here("wrong arrow type");
            }
        }
        Rule::App => {
            expect_premises(2)?;
            let Formula::App(f, a) = &d.formula else { return here("not an application") };
            let (pf, pa) = (prem(0), prem(1));
            if pf.formula != **f || pa.formula != **a || pf.delta != d.delta || pa.delta != d.delta {
                return here("premises do not match");
            }
            if pf.ty.is_prop() || RefinedType::prop(pf.ty.args[0].clone()) != pa.ty || pf.ty.tail() != d.ty {
                return here("argument type mismatch");
            }
        }
        Rule::Unfold => {
            expect_premises(1)?;
            let p = prem(0);
            let Ok(u) = unfold_fixpoint(&d.formula) else { return here("not a fixpoint") };
            if p.formula != u || p.ty != d.ty || p.delta != d.delta {
                return here("premise is not the unfolding");
            }
        }
    }
    for p in &d.premises {
        validate(m, gamma, p)?;
    }
    Ok(())
}
