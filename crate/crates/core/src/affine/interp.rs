use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::rep::{AffineRep, RepError};
use crate::eval::threshold_holds;
use crate::formula::Formula;
use crate::markov::MarkovChain;
use crate::refined::{PropTU, RefinedDerivation, RefinedType, Rule};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum AffineError {
    UnmappedVariable(String),
    Mismatch(String),
    Rep(RepError),
    IterationCap { var: String, gap: f64 },
    /// The fixpoint could not be pinned down exactly.
    Inexact(String),
    /// Fixpoints of both kinds would have to be solved as one system.
    Alternation,
    NotClosed(String),
}

impl fmt::Display for AffineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AffineError::UnmappedVariable(x) => write!(f, "fixpoint variable `{x}` has no representation"),
            AffineError::Mismatch(s) => write!(f, "derivation and representation disagree: {s}"),
            AffineError::Rep(e) => write!(f, "{e}"),
            AffineError::IterationCap { var, gap } => {
                write!(f, "coefficient iteration for `{var}` hit the iteration cap (gap {gap:e})")
            }
            AffineError::Inexact(x) => write!(f, "no exact solution found for `{x}`"),
            AffineError::Alternation => write!(f, "nested fixpoints of both kinds"),
            AffineError::NotClosed(s) => write!(f, "{s}"),
        }
    }
}

impl From<RepError> for AffineError {
    fn from(e: RepError) -> Self {
        AffineError::Rep(e)
    }
}

pub type Gamma<N> = BTreeMap<String, AffineRep<N>>;

/// Chain data shared by all nodes.
pub struct Ctx<'m, N> {
    pub m: &'m MarkovChain,
    pub rows: Vec<Vec<(usize, N)>>,
}

impl<'m, N: Scalar> Ctx<'m, N> {
    pub fn new(m: &'m MarkovChain) -> Self {
        Ctx { m, rows: m.sparse_rows::<N>() }
    }
}

/// Decides what a fixpoint node means for a given scalar type.
pub trait FixHandler<N: Scalar> {
    fn fixpoint(&mut self, ctx: &Ctx<'_, N>, d: &RefinedDerivation, gamma: &mut Gamma<N>) -> Result<AffineRep<N>, AffineError>;
}

/// Argument list of the representation of `λΔ.φ` for a node.
pub fn node_type(d: &RefinedDerivation) -> RefinedType {
    let mut args: Vec<PropTU> = d.delta.iter().map(|(_, tu)| tu.clone()).collect();
    args.extend(d.ty.args.iter().cloned());
    RefinedType { args, result: d.ty.result.clone() }
}

fn mismatch<T>(d: &RefinedDerivation, what: &str) -> Result<T, AffineError> {
    Err(AffineError::Mismatch(format!("{} at `{}`: {what}", d.rule, d.formula)))
}

/// The canonical representation of `λΔ.φ` for the conclusion of `d`.
pub fn interp<N: Scalar, H: FixHandler<N>>(
    ctx: &Ctx<'_, N>,
    d: &RefinedDerivation,
    gamma: &mut Gamma<N>,
    h: &mut H,
) -> Result<AffineRep<N>, AffineError> {
    let n = ctx.m.len();
    let tag = node_type(d);
    let indicator = |set: &crate::markov::StateSet| -> Vec<N> {
        (0..n).map(|i| if set.contains(i) { N::one() } else { N::zero() }).collect()
    };
    let rep = match d.rule {
        Rule::AP => {
            let Formula::Atom(p) = &d.formula else { return mismatch(d, "expected an atom") };
            let set = ctx.m.label(p).ok_or_else(|| AffineError::Mismatch(format!("unknown atom {p}")))?;
            AffineRep::constant(tag, indicator(set))
        }
        Rule::Top => AffineRep::constant(tag, alloc::vec![N::one(); n]),
        Rule::Bot => AffineRep::constant(tag, alloc::vec![N::zero(); n]),
        Rule::Var => {
            let mut r = AffineRep::zero(n, tag);
            for i in 0..n {
                r.set(i, 1, i + 1, N::one());
            }
            r.canonical()
        }
        Rule::FVar => {
            let Formula::Var(x) = &d.formula else { return mismatch(d, "expected a variable") };
            let r = gamma.get(x).ok_or_else(|| AffineError::UnmappedVariable(x.clone()))?;
            if r.ty().args != tag.args {
                return mismatch(d, "fixpoint representation has the wrong argument types");
            }
            r.clone().with_type(tag)
        }
        Rule::WeakTU | Rule::Abs | Rule::Unfold => {
            let r = interp(ctx, &d.premises[0], gamma, h)?;
            if r.ty().args != tag.args {
                return mismatch(d, "premise arguments differ");
            }
            r.with_type(tag)
        }
        Rule::Weak => {
            let p = &d.premises[0];
            let r = interp(ctx, p, gamma, h)?;
            let dp = p.delta.len();
            let pos: Vec<usize> = p
                .delta
                .iter()
                .map(|(x, _)| d.delta.iter().position(|(y, _)| y == x).expect("premise Δ is a subsequence"))
                .collect();
            let map_j = |j: usize| if j <= dp { pos[j - 1] + 1 } else { d.delta.len() + (j - dp) };
            let mut out = AffineRep::zero(n, tag);
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
            let a = interp(ctx, &d.premises[0], gamma, h)?;
            let b = interp(ctx, &d.premises[1], gamma, h)?;
            let (ta, tb) = (&d.premises[0].ty.result, &d.premises[1].ty.result);
            let conj = d.rule == Rule::Conj;
            let mut out = AffineRep::zero(n, tag);
            let m = out.m();
            let copy_row = |out: &mut AffineRep<N>, src: &AffineRep<N>, i: usize| {
                for j in 0..=m {
                    for k in 0..=n {
                        out.set(i, j, k, src.get(i, j, k).clone());
                    }
                }
            };
            for i in 0..n {
                // (absorbing side of the first operand, of the second, neutral sides)
                let (sel_a, sel_b, fixed) = if conj {
                    (ta.u.contains(i), tb.u.contains(i), ta.t.contains(i) || tb.t.contains(i))
                } else {
                    (ta.t.contains(i), tb.t.contains(i), ta.u.contains(i) || tb.u.contains(i))
                };
                if sel_a {
                    copy_row(&mut out, &b, i);
                } else if sel_b {
                    copy_row(&mut out, &a, i);
                } else if fixed {
                    out.set(i, 0, 0, if conj { N::zero() } else { N::one() });
                } else if m == 0 {
                    let (x, y) = (a.get(i, 0, 0).clone(), b.get(i, 0, 0).clone());
                    out.set(i, 0, 0, if conj { N::min_of(x, y) } else { N::max_of(x, y) });
                } else {
                    return mismatch(d, "side condition does not cover a state");
                }
            }
            out
        }
        Rule::J | Rule::Min | Rule::Max => {
            let r = interp(ctx, &d.premises[0], gamma, h)?;
            if r.m() != 0 {
                return mismatch(d, "operand depends on arguments");
            }
            let v = r.constants();
            let out: Vec<N> = match (&d.formula, d.rule) {
                (Formula::Threshold(_, j), Rule::J) => {
                    v.iter().map(|x| if threshold_holds(x, j) { N::one() } else { N::zero() }).collect()
                }
                (_, Rule::Min) => crate::eval::box_vec(ctx.m, &v),
                _ => crate::eval::dia_vec(ctx.m, &v),
            };
            AffineRep::constant(tag, out)
        }
        Rule::Avg => {
            let r = interp(ctx, &d.premises[0], gamma, h)?;
            let mut out = AffineRep::zero(n, tag);
            for (i, row) in ctx.rows.iter().enumerate() {
                for j in 0..=r.m() {
                    for k in 0..=n {
                        let mut acc = N::zero();
                        for (s, p) in row {
                            let c = r.get(*s, j, k);
                            if *c != N::zero() {
                                acc = acc + p.clone() * c.clone();
                            }
                        }
                        out.set(i, j, k, acc);
                    }
                }
            }
            out
        }
        Rule::App => {
            let f = interp(ctx, &d.premises[0], gamma, h)?;
            let a = interp(ctx, &d.premises[1], gamma, h)?;
            let dl = d.delta.len();
            if a.m() != dl || f.m() != dl + 1 + d.ty.args.len() {
                return mismatch(d, "arities do not line up");
            }
            let j0 = dl + 1;
            let mut out = AffineRep::zero(n, tag);
            for i in 0..n {
                let mut c0 = f.get(i, 0, 0).clone();
                for k in 1..=n {
                    let w = f.get(i, j0, k);
                    if *w != N::zero() {
                        c0 = c0 + w.clone() * a.get(k - 1, 0, 0).clone();
                    }
                }
                out.set(i, 0, 0, c0);
                for j in 1..=dl {
                    for k2 in 1..=n {
                        let mut c = f.get(i, j, k2).clone();
                        for k in 1..=n {
                            let w = f.get(i, j0, k);
                            let x = a.get(k - 1, j, k2);
                            if *w != N::zero() && *x != N::zero() {
                                c = c + w.clone() * x.clone();
                            }
                        }
                        out.set(i, j, k2, c);
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
        Rule::Mu | Rule::Nu => h.fixpoint(ctx, d, gamma)?,
    };
    Ok(rep)
}

/// Least (`Mu`) or greatest element of a fixpoint type: all-zero or constant one.
pub fn fix_start<N: Scalar>(n: usize, d: &RefinedDerivation) -> AffineRep<N> {
    let ty = node_type(d);
    match d.rule {
        Rule::Nu => AffineRep::constant(ty, alloc::vec![N::one(); n]),
        _ => AffineRep::zero(n, ty),
    }
}

pub fn binder_of(d: &RefinedDerivation) -> String {
    match &d.formula {
        Formula::Mu(b, _) | Formula::Nu(b, _) => b.name.clone(),
        other => other.to_string(),
    }
}
