use alloc::rc::Rc;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cell::OnceCell;

use super::{atom_vector, avg_vec, box_vec, dia_vec, threshold_holds, EvalConfig, EvalError, QuantVec};
use crate::formula::{simple_typecheck, Formula, SimpleType, TypeEnv};
use crate::markov::MarkovChain;
use crate::scalar::Scalar;

/// A semantic value: a vector for type `*`, a closure for arrow types.
#[derive(Clone)]
pub enum SemValue<'f, N> {
    Prop(Vec<N>),
    Fun(Rc<FunValue<'f, N>>),
}

pub enum FunValue<'f, N> {
    Lam { param: &'f str, body: &'f Formula, env: Env<'f, N> },
    /// The constant function returning `value` after `arity` more arguments.
    Const { arity: usize, value: Vec<N> },
}

type Env<'f, N> = Option<Rc<EnvNode<'f, N>>>;

pub struct EnvNode<'f, N> {
    name: &'f str,
    binding: Binding<'f, N>,
    next: Env<'f, N>,
}

enum Binding<'f, N> {
    Val(SemValue<'f, N>),
    Approx(Rc<Approx<'f, N>>),
}

/// The `depth`-th Kleene approximant of a fixpoint, computed lazily once.
struct Approx<'f, N> {
    is_mu: bool,
    name: &'f str,
    ty: &'f SimpleType,
    body: &'f Formula,
    env: Env<'f, N>,
    depth: usize,
    cache: OnceCell<SemValue<'f, N>>,
}

/// Result of bounded evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedOutcome<N> {
    pub values: QuantVec<N>,
    pub depth: usize,
    /// Set when mu and nu are nested: the result is then only a heuristic approximation.
    pub heuristic: bool,
}

/// Evaluates a closed `*`-typed formula with every fixpoint unfolded `cfg.depth` times.
pub fn eval_bounded<N: Scalar>(m: &MarkovChain, phi: &Formula, cfg: &EvalConfig) -> Result<BoundedOutcome<N>, EvalError> {
    eval_bounded_with(m, phi, cfg, &[])
}

/// Like [`eval_bounded`], with values for free `*`-typed variables.
pub fn eval_bounded_with<N: Scalar>(
    m: &MarkovChain,
    phi: &Formula,
    cfg: &EvalConfig,
    free: &[(String, QuantVec<N>)],
) -> Result<BoundedOutcome<N>, EvalError> {
    let tenv: TypeEnv = free.iter().map(|(x, _)| (x.clone(), SimpleType::Prop)).collect();
    let t = simple_typecheck(&tenv, phi)?;
    if t != SimpleType::Prop {
        return Err(EvalError::NotProp(t.to_string()));
    }
    let ev = Bounded { m, rows: m.sparse_rows::<N>(), depth: cfg.depth };
    let mut env: Env<'_, N> = None;
    for (x, v) in free {
        env = Some(Rc::new(EnvNode { name: x.as_str(), binding: Binding::Val(SemValue::Prop(v.0.clone())), next: env }));
    }
    match ev.eval(phi, &env)? {
        SemValue::Prop(v) => {
            for x in &v {
                debug_assert!(*x >= N::zero() && *x <= N::one(), "value {x} outside [0,1]");
            }
            Ok(BoundedOutcome { values: QuantVec(v), depth: cfg.depth, heuristic: phi.has_alternation() })
        }
        SemValue::Fun(_) => Err(EvalError::NotProp(t.to_string())),
    }
}

struct Bounded<'a, N> {
    m: &'a MarkovChain,
    rows: Vec<Vec<(usize, N)>>,
    depth: usize,
}

fn arity(t: &SimpleType) -> usize {
    match t {
        SimpleType::Prop => 0,
        SimpleType::Arrow(_, r) => 1 + arity(r),
    }
}

fn push<'f, N>(env: &Env<'f, N>, name: &'f str, binding: Binding<'f, N>) -> Env<'f, N> {
    Some(Rc::new(EnvNode { name, binding, next: env.clone() }))
}

impl<'a, N: Scalar> Bounded<'a, N> {
    fn constant<'f>(&self, ty: &SimpleType, v: N) -> SemValue<'f, N> {
        let value = alloc::vec![v; self.m.len()];
        match arity(ty) {
            0 => SemValue::Prop(value),
            k => SemValue::Fun(Rc::new(FunValue::Const { arity: k, value })),
        }
    }

    fn prop<'f>(&self, phi: &'f Formula, env: &Env<'f, N>) -> Result<Vec<N>, EvalError> {
        match self.eval(phi, env)? {
            SemValue::Prop(v) => Ok(v),
            SemValue::Fun(_) => Err(EvalError::NotProp(phi.to_string())),
        }
    }

    fn force<'f>(&self, a: &Rc<Approx<'f, N>>) -> Result<SemValue<'f, N>, EvalError> {
        if let Some(v) = a.cache.get() {
            return Ok(v.clone());
        }
        let v = if a.depth == 0 {
            self.constant(a.ty, if a.is_mu { N::zero() } else { N::one() })
        } else {
            let prev = Rc::new(Approx {
                is_mu: a.is_mu,
                name: a.name,
                ty: a.ty,
                body: a.body,
                env: a.env.clone(),
                depth: a.depth - 1,
                cache: OnceCell::new(),
            });
            let env = push(&a.env, a.name, Binding::Approx(prev));
            self.eval(a.body, &env)?
        };
        let _ = a.cache.set(v.clone());
        Ok(v)
    }

    fn apply<'f>(&self, f: SemValue<'f, N>, arg: SemValue<'f, N>) -> Result<SemValue<'f, N>, EvalError> {
        match f {
            SemValue::Prop(_) => Err(EvalError::NotProp(String::from("application of a proposition"))),
            SemValue::Fun(fun) => match &*fun {
                FunValue::Lam { param, body, env } => {
                    let env = push(env, param, Binding::Val(arg));
                    self.eval(body, &env)
                }
                FunValue::Const { arity, value } => Ok(if *arity == 1 {
                    SemValue::Prop(value.clone())
                } else {
                    SemValue::Fun(Rc::new(FunValue::Const { arity: arity - 1, value: value.clone() }))
                }),
            },
        }
    }

    fn eval<'f>(&self, phi: &'f Formula, env: &Env<'f, N>) -> Result<SemValue<'f, N>, EvalError> {
        let n = self.m.len();
        Ok(match phi {
            Formula::Top => SemValue::Prop(alloc::vec![N::one(); n]),
            Formula::Bot => SemValue::Prop(alloc::vec![N::zero(); n]),
            Formula::Atom(a) => SemValue::Prop(atom_vector(self.m, a)?),
            Formula::Var(x) => {
                let mut cur = env;
                loop {
                    match cur {
                        None => return Err(EvalError::NotClosed(x.clone())),
                        Some(node) if node.name == x => {
                            break match &node.binding {
                                Binding::Val(v) => v.clone(),
                                Binding::Approx(a) => self.force(a)?,
                            }
                        }
                        Some(node) => cur = &node.next,
                    }
                }
            }
            Formula::Or(a, b) | Formula::And(a, b) => {
                let x = self.prop(a, env)?;
                let y = self.prop(b, env)?;
                let is_or = matches!(phi, Formula::Or(..));
                SemValue::Prop(
                    x.into_iter().zip(y).map(|(p, q)| if is_or { N::max_of(p, q) } else { N::min_of(p, q) }).collect(),
                )
            }
            Formula::Avg(a) => SemValue::Prop(avg_vec(&self.rows, &self.prop(a, env)?)),
            Formula::Box(a) => SemValue::Prop(box_vec(self.m, &self.prop(a, env)?)),
            Formula::Dia(a) => SemValue::Prop(dia_vec(self.m, &self.prop(a, env)?)),
            Formula::Threshold(a, j) => SemValue::Prop(
                self.prop(a, env)?
                    .iter()
                    .map(|v| if threshold_holds(v, j) { N::one() } else { N::zero() })
                    .collect(),
            ),
            Formula::Mu(b, body) | Formula::Nu(b, body) => {
                let a = Rc::new(Approx {
                    is_mu: matches!(phi, Formula::Mu(..)),
                    name: &b.name,
                    ty: &b.ty,
                    body,
                    env: env.clone(),
                    depth: self.depth,
                    cache: OnceCell::new(),
                });
                self.force(&a)?
            }
            Formula::Lam(b, body) => SemValue::Fun(Rc::new(FunValue::Lam { param: &b.name, body, env: env.clone() })),
            Formula::App(f, a) => {
                let fv = self.eval(f, env)?;
                let av = self.eval(a, env)?;
                self.apply(fv, av)?
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::markov::tests::example_chain;
    use crate::rational::{int, rat, Rational};

    fn ev(src: &str, depth: usize) -> Vec<Rational> {
        let cfg = EvalConfig { depth, ..EvalConfig::default() };
        eval_bounded::<Rational>(&example_chain(), &parse_formula(src).unwrap(), &cfg).unwrap().values.0
    }

    #[test]
    fn depth_zero_is_bottom() {
        assert_eq!(ev(r"mu X. p2 \/ X", 0), alloc::vec![int(0), int(0)]);
        assert_eq!(ev(r"nu X. p2 /\ X", 0), alloc::vec![int(1), int(1)]);
    }

    #[test]
    fn reachability_sup_over_steps() {
        // (mu F. \X. X \/ F (avg X)) p at depth k is max_{j<k} avg^j p.
        let src = r"(mu F:*->*. \X. X \/ F (avg X)) p2";
        assert_eq!(ev(src, 1), alloc::vec![int(0), int(1)]);
        assert_eq!(ev(src, 2), alloc::vec![rat(1, 2), int(1)]);
        assert_eq!(ev(src, 4), alloc::vec![rat(7, 8), int(1)]);
    }

    #[test]
    fn matches_order0_on_order0_formulas() {
        let src = r"mu X. p2 \/ avg X";
        assert_eq!(ev(src, 3), alloc::vec![rat(3, 4), int(1)]);
    }

    #[test]
    fn free_variables_and_lambdas() {
        let cfg = EvalConfig::default();
        let m = example_chain();
        let phi = parse_formula_vars(r"(\X. avg X) Y", &["Y"]);
        let out = eval_bounded_with(&m, &phi, &cfg, &[(String::from("Y"), QuantVec(alloc::vec![int(1), int(0)]))]).unwrap();
        assert_eq!(out.values.0, alloc::vec![rat(1, 2), int(0)]);
    }

    fn parse_formula_vars(s: &str, v: &[&str]) -> Formula {
        crate::formula::parse_formula_with_vars(s, v).unwrap()
    }

    #[test]
    fn monotone_in_argument() {
        let m = example_chain();
        let cfg = EvalConfig { depth: 6, ..EvalConfig::default() };
        let phi = parse_formula_vars(r"(mu F:*->*. \X. X \/ F (avg X)) Y", &["Y"]);
        let lo = eval_bounded_with(&m, &phi, &cfg, &[(String::from("Y"), QuantVec(alloc::vec![rat(1, 4), int(0)]))]).unwrap();
        let hi = eval_bounded_with(&m, &phi, &cfg, &[(String::from("Y"), QuantVec(alloc::vec![rat(1, 2), rat(1, 3)]))]).unwrap();
        assert!(lo.values.leq(&hi.values));
    }

    #[test]
    fn alternation_is_flagged() {
        let cfg = EvalConfig { depth: 4, ..EvalConfig::default() };
        let o = eval_bounded::<f64>(&example_chain(), &parse_formula(r"mu X. nu Y. (p2 /\ avg Y) \/ avg X").unwrap(), &cfg).unwrap();
        assert!(o.heuristic);
    }
}
