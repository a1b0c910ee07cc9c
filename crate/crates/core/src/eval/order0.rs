use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{atom_vector, avg_vec, box_vec, dia_vec, threshold_holds, EvalConfig, EvalError, QuantVec, Values};
use crate::formula::{free_vars, order_of, simple_typecheck, Formula, SimpleType, TypeEnv};
use crate::markov::MarkovChain;
use crate::rational::Rational;
use crate::scalar::Scalar;

/// Result of order-0 evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Order0Outcome {
    pub values: Values,
    /// Every fixpoint iteration became exactly stationary in rational arithmetic.
    pub exact: bool,
    /// Every fixpoint iteration became exactly stationary (in whichever arithmetic was used).
    pub stationary: bool,
    /// Threshold comparisons made within `tol` of the bound on inexact values.
    pub boundary: Vec<String>,
    pub precision_note: Option<String>,
    pub iterations: usize,
}

/// Evaluates a closed order-0 formula of type `*`.
///
/// Rational arithmetic is used first; if iterates outgrow `cfg.bit_budget` the evaluation restarts
/// in floating point and records a note.
pub fn eval_order0(m: &MarkovChain, phi: &Formula, cfg: &EvalConfig) -> Result<Order0Outcome, EvalError> {
    check_order0(phi)?;
    match run::<Rational>(m, phi, cfg, &[]) {
        Ok(o) => Ok(o),
        Err(EvalError::BitBudget) => {
            let mut o = run::<f64>(m, phi, cfg, &[])?;
            o.precision_note =
                Some(format!("rational iterates exceeded {} bits; switched to floating point", cfg.bit_budget));
            Ok(o)
        }
        Err(e) => Err(e),
    }
}

/// Order-0 evaluation in a fixed number type.
pub fn eval_order0_as<N: Scalar + IntoValues>(
    m: &MarkovChain,
    phi: &Formula,
    cfg: &EvalConfig,
) -> Result<Order0Outcome, EvalError> {
    check_order0(phi)?;
    run::<N>(m, phi, cfg, &[])
}

/// Order-0 evaluation of a formula whose free `*`-typed variables are given values.
pub fn eval_order0_with<N: Scalar + IntoValues>(
    m: &MarkovChain,
    phi: &Formula,
    cfg: &EvalConfig,
    env: &[(String, QuantVec<N>)],
) -> Result<Order0Outcome, EvalError> {
    let tenv: TypeEnv = env.iter().map(|(x, _)| (x.clone(), SimpleType::Prop)).collect();
    let t = simple_typecheck(&tenv, phi)?;
    if t != SimpleType::Prop {
        return Err(EvalError::NotProp(t.to_string()));
    }
    let o = order_of(phi, &tenv)?;
    if o != 0 {
        return Err(EvalError::NotOrderZero(o));
    }
    run::<N>(m, phi, cfg, env)
}

fn check_order0(phi: &Formula) -> Result<(), EvalError> {
    if let Some(x) = free_vars(phi).into_iter().next() {
        return Err(EvalError::NotClosed(x));
    }
    let t = simple_typecheck(&TypeEnv::new(), phi)?;
    if t != SimpleType::Prop {
        return Err(EvalError::NotProp(t.to_string()));
    }
    let o = order_of(phi, &TypeEnv::new())?;
    if o != 0 {
        return Err(EvalError::NotOrderZero(o));
    }
    Ok(())
}

/// Conversion of a vector of scalars into [`Values`].
pub trait IntoValues: Sized {
    fn into_values(v: Vec<Self>) -> Values;
}

impl IntoValues for Rational {
    fn into_values(v: Vec<Self>) -> Values {
        Values::Exact(v)
    }
}

impl IntoValues for f64 {
    fn into_values(v: Vec<Self>) -> Values {
        Values::Float(v)
    }
}

fn run<N: Scalar + IntoValues>(
    m: &MarkovChain,
    phi: &Formula,
    cfg: &EvalConfig,
    env: &[(String, QuantVec<N>)],
) -> Result<Order0Outcome, EvalError> {
    let mut ev = Order0 {
        m,
        rows: m.sparse_rows::<N>(),
        cfg,
        stationary: true,
        boundary: Vec::new(),
        iterations: 0,
    };
    let mut stack: Vec<(&str, Vec<N>, bool)> = env.iter().map(|(x, v)| (x.as_str(), v.0.clone(), N::EXACT)).collect();
    let (values, exact) = ev.eval(phi, &mut stack)?;
    for v in &values {
        debug_assert!(*v >= N::zero() && *v <= N::one(), "value {v} outside [0,1]");
    }
    Ok(Order0Outcome {
        values: N::into_values(values),
        exact: exact && N::EXACT,
        stationary: ev.stationary,
        boundary: ev.boundary,
        precision_note: None,
        iterations: ev.iterations,
    })
}

struct Order0<'a, N> {
    m: &'a MarkovChain,
    rows: Vec<Vec<(usize, N)>>,
    cfg: &'a EvalConfig,
    stationary: bool,
    boundary: Vec<String>,
    iterations: usize,
}

impl<'a, N: Scalar> Order0<'a, N> {
    /// Returns the value and whether it is exact (every fixpoint inside reached a stationary iterate).
    fn eval<'f>(&mut self, phi: &'f Formula, env: &mut Vec<(&'f str, Vec<N>, bool)>) -> Result<(Vec<N>, bool), EvalError> {
        let n = self.m.len();
        Ok(match phi {
            Formula::Top => (alloc::vec![N::one(); n], true),
            Formula::Bot => (alloc::vec![N::zero(); n], true),
            Formula::Atom(a) => (atom_vector(self.m, a)?, true),
            Formula::Var(x) => match env.iter().rev().find(|(y, _, _)| *y == x) {
                Some((_, v, e)) => (v.clone(), *e),
                None => return Err(EvalError::NotClosed(x.clone())),
            },
            Formula::Or(a, b) | Formula::And(a, b) => {
                let (x, ex) = self.eval(a, env)?;
                let (y, ey) = self.eval(b, env)?;
                let is_or = matches!(phi, Formula::Or(..));
                let v = x
                    .into_iter()
                    .zip(y)
                    .map(|(p, q)| if is_or { N::max_of(p, q) } else { N::min_of(p, q) })
                    .collect();
                (v, ex && ey)
            }
            Formula::Avg(a) => {
                let (x, e) = self.eval(a, env)?;
                (avg_vec(&self.rows, &x), e)
            }
            Formula::Box(a) => {
                let (x, e) = self.eval(a, env)?;
                (box_vec(self.m, &x), e)
            }
            Formula::Dia(a) => {
                let (x, e) = self.eval(a, env)?;
                (dia_vec(self.m, &x), e)
            }
            Formula::Threshold(a, j) => {
                let (x, e) = self.eval(a, env)?;
                let r = crate::rational::to_f64(j.r());
                let mut out = Vec::with_capacity(n);
                for (i, v) in x.iter().enumerate() {
                    if !(e && N::EXACT) && (v.to_f64() - r).abs() < self.cfg.tol {
                        self.boundary.push(format!("[{a}] {j} at state {} (value {v})", self.m.state_name(i)));
                    }
                    out.push(if threshold_holds(v, j) { N::one() } else { N::zero() });
                }
                (out, e)
            }
            Formula::Mu(b, body) | Formula::Nu(b, body) => {
                let is_mu = matches!(phi, Formula::Mu(..));
                let mut x = if is_mu { alloc::vec![N::zero(); n] } else { alloc::vec![N::one(); n] };
                let mut iter = 0usize;
                loop {
                    env.push((&b.name, x.clone(), true));
                    let r = self.eval(body, env);
                    env.pop();
                    let (next, e) = r?;
                    iter += 1;
                    self.iterations += 1;
                    debug_assert!(
                        next.iter().zip(&x).all(|(a, c)| if is_mu {
                            a.to_f64() >= c.to_f64() - self.cfg.tol
                        } else {
                            a.to_f64() <= c.to_f64() + self.cfg.tol
                        }),
                        "Kleene chain is not monotone"
                    );
                    if next == x {
                        break (next, e);
                    }
                    let gap = next.iter().zip(&x).map(|(a, c)| crate::scalar::gap(a, c)).fold(0.0, f64::max);
                    if gap <= self.cfg.tol {
                        self.stationary = false;
                        break (next, false);
                    }
                    if iter >= self.cfg.max_iter {
                        return Err(EvalError::IterationCap {
                            var: b.name.clone(),
                            previous: x.iter().map(|v| v.to_f64()).collect(),
                            last: next.iter().map(|v| v.to_f64()).collect(),
                            gap,
                        });
                    }
                    if N::EXACT && next.iter().any(|v| v.size_bits() > self.cfg.bit_budget) {
                        return Err(EvalError::BitBudget);
                    }
                    x = next;
                }
            }
            Formula::Lam(..) | Formula::App(..) => return Err(EvalError::NotOrderZero(1)),
        })
    }
}
