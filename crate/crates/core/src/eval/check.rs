use alloc::format;
use alloc::string::String;
use core::fmt;

use super::{eval_bounded, eval_order0, EvalConfig, EvalError, Values};
use crate::affine::{interpret_affine, AffineConfig, Gamma, RepValue};
use crate::formula::{order_of, simple_typecheck, Formula, SimpleType, TypeEnv};
use crate::markov::MarkovChain;
use crate::rational::{self, Rational};
use crate::refined::{infer_refined, RefinedEnv};

/// Whether `M ⊨ φ`, i.e. `⟦φ⟧(s_in) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelVerdict {
    Holds,
    Fails,
    /// The value is within `tol` of 1 but was not pinned down, or the method was inconclusive.
    Boundary,
}

impl fmt::Display for ModelVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelVerdict::Holds => "holds",
            ModelVerdict::Fails => "fails",
            ModelVerdict::Boundary => "boundary",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub verdict: ModelVerdict,
    /// Value at the initial state, as text.
    pub value: String,
    /// `order0`, `affine` or `bounded`.
    pub method: &'static str,
    pub exact: bool,
}

fn has_fix(phi: &Formula, nu: bool) -> bool {
    match phi {
        Formula::Mu(_, b) => !nu || has_fix(b, nu),
        Formula::Nu(_, b) => nu || has_fix(b, nu),
        _ => phi.children().into_iter().any(|c| has_fix(c, nu)),
    }
}

fn near_one(v: f64, tol: f64) -> bool {
    (1.0 - v).abs() < tol
}

fn affine_check(m: &MarkovChain, phi: &Formula, cfg: &EvalConfig) -> Option<CheckOutcome> {
    let (_, d) = infer_refined(m, &RefinedEnv::default(), phi).ok()?;
    let acfg = AffineConfig { tol: cfg.tol, ..AffineConfig::default() };
    let out = interpret_affine(m, &d, &Gamma::new(), &acfg).ok()?;
    let init = m.init();
    let verdict = match &out.rep {
        RepValue::Exact(r) => exact_verdict(r.get(init, 0, 0)),
        RepValue::Approx(r) if near_one(*r.get(init, 0, 0), cfg.tol) => ModelVerdict::Boundary,
        RepValue::Approx(_) => ModelVerdict::Fails,
    };
    Some(CheckOutcome { verdict, value: out.rep.constant_text(init), method: "affine", exact: out.exact() })
}

/// Decides `M ⊨ φ` for a closed formula of type `*`.
///
/// Order-0 formulas are evaluated by Kleene iteration; when that is not exact, and for higher-order
/// formulas, the affine representation is used if the formula is refined-typable. The last resort
/// is bounded unfolding, which is conclusive only when all fixpoints are of one kind.
pub fn check_models(m: &MarkovChain, phi: &Formula, cfg: &EvalConfig) -> Result<CheckOutcome, EvalError> {
    let ty = simple_typecheck(&TypeEnv::new(), phi)?;
    if ty != SimpleType::Prop {
        return Err(EvalError::NotProp(format!("{ty}")));
    }
    let init = m.init();
    let order0 = if order_of(phi, &TypeEnv::new())? == 0 {
        let out = eval_order0(m, phi, cfg)?;
        if let (true, Values::Exact(v)) = (out.exact, &out.values) {
            return Ok(CheckOutcome { verdict: exact_verdict(&v[init]), value: format!("{}", v[init]), method: "order0", exact: true });
        }
        Some(out)
    } else {
        None
    };
    if let Some(out) = affine_check(m, phi, cfg) {
        if out.exact || order0.is_none() {
            return Ok(out);
        }
    }
    if let Some(out) = order0 {
        let x = out.values.to_f64()[init];
        let verdict = if !near_one(x, cfg.tol) {
            ModelVerdict::Fails
        } else if out.stationary && out.boundary.is_empty() && x == 1.0 {
            ModelVerdict::Holds
        } else {
            ModelVerdict::Boundary
        };
        return Ok(CheckOutcome { verdict, value: out.values.component(init), method: "order0", exact: false });
    }
    let out = eval_bounded::<Rational>(m, phi, cfg)?;
    let v = &out.values.0[init];
    let (mu, nu) = (has_fix(phi, false), has_fix(phi, true));
    // Without ν the unfolding is a lower bound, without μ an upper bound.
    let verdict = if !nu && *v == rational::int(1) {
        ModelVerdict::Holds
    } else if !mu && *v < rational::int(1) {
        ModelVerdict::Fails
    } else {
        ModelVerdict::Boundary
    };
    Ok(CheckOutcome { verdict, value: format!("{v}"), method: "bounded", exact: false })
}

fn exact_verdict(v: &Rational) -> ModelVerdict {
    if *v == rational::int(1) {
        ModelVerdict::Holds
    } else {
        ModelVerdict::Fails
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::markov::tests::example_chain;
    use crate::rational::rat;
    use crate::reductions::reduce_phors;
    use crate::formula::ThresholdBound;

    fn check(m: &MarkovChain, src: &str) -> CheckOutcome {
        check_models(m, &parse_formula(src).unwrap(), &EvalConfig::default()).unwrap()
    }

    #[test]
    fn order0_verdicts() {
        let m = example_chain();
        assert_eq!(check(&m, "top").verdict, ModelVerdict::Holds);
        assert_eq!(check(&m, "[p2]>1/2").verdict, ModelVerdict::Fails);
        assert_eq!(check(&m, "mu X. p2 \\/ avg X").verdict, ModelVerdict::Holds);
        assert_eq!(check(&m, "mu X. X").verdict, ModelVerdict::Fails);
    }

    #[test]
    fn higher_order_verdicts() {
        let m = example_chain();
        let out = check(&m, "(mu X : {;}->{;}. \\Y. (p2 /\\ Y) \\/ (p1 /\\ avg (X Y))) p2");
        assert_eq!((out.verdict, out.method), (ModelVerdict::Holds, "affine"));
        // Not refined-typable at trivial annotations; a pure-μ unfolding reaches 1 exactly.
        let out = check(&m, "(mu F : * -> *. \\X. X \\/ F (avg X)) top");
        assert_eq!(out.verdict, ModelVerdict::Holds);
    }

    #[test]
    fn random_walk_threshold_holds() {
        let g = crate::reductions::tests::random_walk(rat(1, 3));
        let inst = reduce_phors(&g).unwrap();
        let phi = Formula::threshold(inst.formula.clone(), ThresholdBound::ge(rat(1, 2)).unwrap());
        let out = check_models(&inst.chain, &phi, &EvalConfig::default()).unwrap();
        assert_eq!(out.verdict, ModelVerdict::Holds);
        let phi = Formula::threshold(inst.formula, ThresholdBound::gt(rat(1, 2)).unwrap());
        assert_eq!(check_models(&inst.chain, &phi, &EvalConfig::default()).unwrap().verdict, ModelVerdict::Fails);
    }
}
