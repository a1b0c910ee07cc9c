use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::ast::{Binder, Formula};

/// Free variables (not atoms) of a formula.
pub fn free_vars(phi: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free(phi, &mut Vec::new(), &mut out);
    out
}

fn collect_free(phi: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    match phi {
        Formula::Var(x) => {
            if !bound.iter().any(|b| b == x) {
                out.insert(x.clone());
            }
        }
        Formula::Mu(b, body) | Formula::Nu(b, body) | Formula::Lam(b, body) => {
            bound.push(b.name.clone());
            collect_free(body, bound, out);
            bound.pop();
        }
        _ => {
            for c in phi.children() {
                collect_free(c, bound, out);
            }
        }
    }
}

/// All variable names used anywhere, bound or free.
pub fn all_var_names(phi: &Formula) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    fn go(f: &Formula, out: &mut BTreeSet<String>) {
        match f {
            Formula::Var(x) => {
                out.insert(x.clone());
            }
            Formula::Mu(b, _) | Formula::Nu(b, _) | Formula::Lam(b, _) => {
                out.insert(b.name.clone());
            }
            _ => {}
        }
        for c in f.children() {
            go(c, out);
        }
    }
    go(phi, &mut out);
    out
}

/// `base` with primes appended until it avoids `taken`.
pub fn fresh_name(base: &str, taken: &BTreeSet<String>) -> String {
    let mut name = String::from(base);
    name.push('\'');
    while taken.contains(&name) {
        name.push('\'');
    }
    name
}

/// Capture-avoiding substitution `[psi/x]phi`.
pub fn substitute(phi: &Formula, x: &str, psi: &Formula) -> Formula {
    let fv = free_vars(psi);
    subst_rec(phi, x, psi, &fv)
}

fn subst_rec(phi: &Formula, x: &str, psi: &Formula, fv_psi: &BTreeSet<String>) -> Formula {
    let rec = |f: &Formula| Box::new(subst_rec(f, x, psi, fv_psi));
    match phi {
        Formula::Var(y) if y == x => psi.clone(),
        Formula::Top | Formula::Bot | Formula::Atom(_) | Formula::Var(_) => phi.clone(),
        Formula::Or(a, b) => Formula::Or(rec(a), rec(b)),
        Formula::And(a, b) => Formula::And(rec(a), rec(b)),
        Formula::App(a, b) => Formula::App(rec(a), rec(b)),
        Formula::Threshold(a, j) => Formula::Threshold(rec(a), j.clone()),
        Formula::Box(a) => Formula::Box(rec(a)),
        Formula::Dia(a) => Formula::Dia(rec(a)),
        Formula::Avg(a) => Formula::Avg(rec(a)),
        Formula::Mu(b, body) | Formula::Nu(b, body) | Formula::Lam(b, body) => {
            let rebuild = |b: Binder, body: Formula| match phi {
                Formula::Mu(..) => Formula::mu(b, body),
                Formula::Nu(..) => Formula::nu(b, body),
                _ => Formula::lam(b, body),
            };
            if b.name == x || !free_vars(body).contains(x) {
                return phi.clone();
            }
            if fv_psi.contains(&b.name) {
                let mut taken = fv_psi.clone();
                taken.extend(all_var_names(body));
                taken.insert(String::from(x));
                let new = fresh_name(&b.name, &taken);
                let renamed = substitute(body, &b.name, &Formula::Var(new.clone()));
                rebuild(b.renamed(new), subst_rec(&renamed, x, psi, fv_psi))
            } else {
                rebuild(b.clone(), subst_rec(body, x, psi, fv_psi))
            }
        }
    }
}

/// α-equivalence. Binder annotations must agree.
pub fn alpha_eq(a: &Formula, b: &Formula) -> bool {
    alpha_rec(a, b, &mut Vec::new())
}

fn alpha_rec<'a>(a: &'a Formula, b: &'a Formula, env: &mut Vec<(&'a str, &'a str)>) -> bool {
    match (a, b) {
        (Formula::Var(x), Formula::Var(y)) => {
            for (l, r) in env.iter().rev() {
                if *l == x || *r == y {
                    return *l == x && *r == y;
                }
            }
            x == y
        }
        (Formula::Top, Formula::Top) | (Formula::Bot, Formula::Bot) => true,
        (Formula::Atom(x), Formula::Atom(y)) => x == y,
        (Formula::Or(a1, a2), Formula::Or(b1, b2))
        | (Formula::And(a1, a2), Formula::And(b1, b2))
        | (Formula::App(a1, a2), Formula::App(b1, b2)) => alpha_rec(a1, b1, env) && alpha_rec(a2, b2, env),
        (Formula::Threshold(a1, j1), Formula::Threshold(b1, j2)) => j1 == j2 && alpha_rec(a1, b1, env),
        (Formula::Box(x), Formula::Box(y)) | (Formula::Dia(x), Formula::Dia(y)) | (Formula::Avg(x), Formula::Avg(y)) => {
            alpha_rec(x, y, env)
        }
        (Formula::Mu(bx, x), Formula::Mu(by, y))
        | (Formula::Nu(bx, x), Formula::Nu(by, y))
        | (Formula::Lam(bx, x), Formula::Lam(by, y)) => {
            if bx.ty != by.ty || bx.refined != by.refined {
                return false;
            }
            env.push((&bx.name, &by.name));
            let r = alpha_rec(x, y, env);
            env.pop();
            r
        }
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotAFixpoint;

impl fmt::Display for NotAFixpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "formula is not a fixpoint")
    }
}

/// One-step unfolding: `muX.phi` becomes `[muX.phi/X]phi`.
pub fn unfold_fixpoint(phi: &Formula) -> Result<Formula, NotAFixpoint> {
    match phi {
        Formula::Mu(b, body) | Formula::Nu(b, body) => Ok(substitute(body, &b.name, phi)),
        _ => Err(NotAFixpoint),
    }
}

/// Contracts every beta-redex whose function part is a lambda, bottom-up, at most `fuel` times.
pub fn beta_normalize(phi: &Formula, fuel: &mut usize) -> Formula {
    let rec = |f: &Formula, fuel: &mut usize| Box::new(beta_normalize(f, fuel));
    match phi {
        Formula::App(f, a) => {
            let f2 = beta_normalize(f, fuel);
            let a2 = beta_normalize(a, fuel);
            if let Formula::Lam(b, body) = &f2 {
                if *fuel > 0 {
                    *fuel -= 1;
                    return beta_normalize(&substitute(body, &b.name, &a2), fuel);
                }
            }
            Formula::app(f2, a2)
        }
        Formula::Or(a, b) => Formula::Or(rec(a, fuel), rec(b, fuel)),
        Formula::And(a, b) => Formula::And(rec(a, fuel), rec(b, fuel)),
        Formula::Threshold(a, j) => Formula::Threshold(rec(a, fuel), j.clone()),
        Formula::Box(a) => Formula::Box(rec(a, fuel)),
        Formula::Dia(a) => Formula::Dia(rec(a, fuel)),
        Formula::Avg(a) => Formula::Avg(rec(a, fuel)),
        Formula::Mu(b, body) => Formula::Mu(b.clone(), rec(body, fuel)),
        Formula::Nu(b, body) => Formula::Nu(b.clone(), rec(body, fuel)),
        Formula::Lam(b, body) => Formula::Lam(b.clone(), rec(body, fuel)),
        _ => phi.clone(),
    }
}

/// Renames binders so that every binder name is distinct and none clashes with a name in `avoid`
/// or with a free variable.
pub fn uniquify_binders(phi: &Formula, avoid: &BTreeSet<String>) -> Formula {
    let mut taken = avoid.clone();
    taken.extend(free_vars(phi));
    uniq_rec(phi, &mut taken)
}

fn uniq_rec(phi: &Formula, taken: &mut BTreeSet<String>) -> Formula {
    match phi {
        Formula::Mu(b, body) | Formula::Nu(b, body) | Formula::Lam(b, body) => {
            let (b2, body2) = if taken.contains(&b.name) {
                let mut all = taken.clone();
                all.extend(all_var_names(body));
                let new = fresh_name(&b.name, &all);
                let renamed = substitute(body, &b.name, &Formula::Var(new.clone()));
                (b.renamed(new), renamed)
            } else {
                (b.clone(), (**body).clone())
            };
            taken.insert(b2.name.clone());
            let inner = uniq_rec(&body2, taken);
            match phi {
                Formula::Mu(..) => Formula::mu(b2, inner),
                Formula::Nu(..) => Formula::nu(b2, inner),
                _ => Formula::lam(b2, inner),
            }
        }
        Formula::Or(a, b) => {
            let a2 = uniq_rec(a, taken);
            Formula::or(a2, uniq_rec(b, taken))
        }
        Formula::And(a, b) => {
            let a2 = uniq_rec(a, taken);
            Formula::and(a2, uniq_rec(b, taken))
        }
        Formula::App(a, b) => {
            let a2 = uniq_rec(a, taken);
            Formula::app(a2, uniq_rec(b, taken))
        }
        Formula::Threshold(a, j) => Formula::threshold(uniq_rec(a, taken), j.clone()),
        Formula::Box(a) => Formula::boxed(uniq_rec(a, taken)),
        Formula::Dia(a) => Formula::dia(uniq_rec(a, taken)),
        Formula::Avg(a) => Formula::avg(uniq_rec(a, taken)),
        _ => phi.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn p(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn substitution_examples() {
        assert_eq!(substitute(&Formula::var("X"), "X", &Formula::atom("p")), Formula::atom("p"));
        let lam = Formula::lam(Binder::prop("Y"), Formula::or(Formula::var("X"), Formula::var("Y")));
        let out = substitute(&lam, "X", &Formula::var("Y"));
        let expected = Formula::lam(Binder::prop("Y'"), Formula::or(Formula::var("Y"), Formula::var("Y'")));
        assert_eq!(out, expected);
        let mu = Formula::mu(Binder::prop("X"), Formula::var("X"));
        assert_eq!(substitute(&mu, "X", &Formula::atom("p")), mu);
    }

    #[test]
    fn alpha_equivalence() {
        assert!(alpha_eq(&p(r"\X. X"), &p(r"\Y. Y")));
        assert!(!alpha_eq(&p(r"\X. \Y. X"), &p(r"\X. \Y. Y")));
        assert!(alpha_eq(&p(r"mu X. p \/ avg X"), &p(r"mu Z. p \/ avg Z")));
        assert!(!alpha_eq(&p(r"\X:*. X"), &p(r"\X:*->*. X")));
    }

    #[test]
    fn unfolding() {
        let f = p(r"mu X. p \/ avg X");
        assert_eq!(unfold_fixpoint(&f).unwrap(), Formula::or(Formula::atom("p"), Formula::avg(f.clone())));
        let g = p(r"nu X. X");
        assert_eq!(unfold_fixpoint(&g).unwrap(), g);
        assert!(unfold_fixpoint(&Formula::Top).is_err());
    }

    #[test]
    fn unfold_twice_and_beta_reduce() {
        let psi = p(r"mu F:*->*. \X. X \/ F (avg X)");
        let once = unfold_fixpoint(&psi).unwrap();
        let phi = Formula::app(once, Formula::atom("p"));
        let mut fuel = 8;
        let r1 = beta_normalize(&phi, &mut fuel);
        // p \/ psi (avg p)
        let expected1 = Formula::or(Formula::atom("p"), Formula::app(psi.clone(), Formula::avg(Formula::atom("p"))));
        assert!(alpha_eq(&r1, &expected1));
        let Formula::Or(_, rest) = &r1 else { panic!() };
        let Formula::App(f, arg) = &**rest else { panic!() };
        let unfolded = Formula::app(unfold_fixpoint(f).unwrap(), (**arg).clone());
        let mut fuel = 8;
        let r2 = beta_normalize(&unfolded, &mut fuel);
        let avg_p = Formula::avg(Formula::atom("p"));
        let expected2 = Formula::or(avg_p.clone(), Formula::app(psi, Formula::avg(avg_p)));
        assert!(alpha_eq(&r2, &expected2));
    }

    #[test]
    fn uniquify_separates_binders() {
        let f = p(r"(\X. X) (\X. X) \/ (mu X. X)");
        let g = uniquify_binders(&f, &BTreeSet::new());
        let names: Vec<String> = {
            let mut v = Vec::new();
            fn go(f: &Formula, v: &mut Vec<String>) {
                if let Formula::Lam(b, _) | Formula::Mu(b, _) | Formula::Nu(b, _) = f {
                    v.push(b.name.clone());
                }
                for c in f.children() {
                    go(c, v);
                }
            }
            go(&g, &mut v);
            v
        };
        let set: BTreeSet<_> = names.iter().cloned().collect();
        assert_eq!(set.len(), names.len());
        assert!(alpha_eq(&f, &g));
    }
}
