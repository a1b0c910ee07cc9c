use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;

use super::ast::{Formula, SimpleType};

/// Types of free variables.
pub type TypeEnv = BTreeMap<String, SimpleType>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeError {
    pub subformula: String,
    pub msg: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "type error in `{}`: {}", self.subformula, self.msg)
    }
}

fn err(phi: &Formula, msg: String) -> TypeError {
    TypeError { subformula: phi.to_string(), msg }
}

/// The unique simple type of `phi` under `env`.
pub fn simple_typecheck(env: &TypeEnv, phi: &Formula) -> Result<SimpleType, TypeError> {
    let mut env = env.clone();
    check(&mut env, phi, &mut 0)
}

/// Largest order of any type in the typing derivation of `phi`.
pub fn order_of(phi: &Formula, env: &TypeEnv) -> Result<usize, TypeError> {
    let mut env = env.clone();
    let mut max = 0;
    check(&mut env, phi, &mut max)?;
    Ok(max)
}

fn expect_prop(env: &mut TypeEnv, phi: &Formula, sub: &Formula, max: &mut usize) -> Result<(), TypeError> {
    let t = check(env, sub, max)?;
    if t != SimpleType::Prop {
        return Err(err(phi, format!("operand `{sub}` has type {t}, expected *")));
    }
    Ok(())
}

fn check(env: &mut TypeEnv, phi: &Formula, max: &mut usize) -> Result<SimpleType, TypeError> {
    let t = match phi {
        Formula::Top | Formula::Bot | Formula::Atom(_) => SimpleType::Prop,
        Formula::Var(x) => match env.get(x) {
            Some(t) => t.clone(),
            None => return Err(err(phi, format!("unbound variable `{x}`"))),
        },
        Formula::Or(a, b) | Formula::And(a, b) => {
            expect_prop(env, phi, a, max)?;
            expect_prop(env, phi, b, max)?;
            SimpleType::Prop
        }
        Formula::Threshold(a, _) | Formula::Box(a) | Formula::Dia(a) | Formula::Avg(a) => {
            expect_prop(env, phi, a, max)?;
            SimpleType::Prop
        }
        Formula::Mu(b, body) | Formula::Nu(b, body) => {
            let prev = env.insert(b.name.clone(), b.ty.clone());
            let r = check(env, body, max);
            restore(env, &b.name, prev);
            let t = r?;
            if t != b.ty {
                return Err(err(phi, format!("fixpoint body has type {t}, but `{}` is annotated {}", b.name, b.ty)));
            }
            *max = (*max).max(b.ty.order());
            t
        }
        Formula::Lam(b, body) => {
            let prev = env.insert(b.name.clone(), b.ty.clone());
            let r = check(env, body, max);
            restore(env, &b.name, prev);
            SimpleType::arrow(b.ty.clone(), r?)
        }
        Formula::App(f, a) => {
            let tf = check(env, f, max)?;
            let ta = check(env, a, max)?;
            match tf {
                SimpleType::Arrow(dom, cod) => {
                    if *dom != ta {
                        return Err(err(phi, format!("argument `{a}` has type {ta}, expected {dom}")));
                    }
                    *cod
                }
                SimpleType::Prop => return Err(err(phi, format!("`{f}` has type * and cannot be applied"))),
            }
        }
    };
    *max = (*max).max(t.order());
    Ok(t)
}

fn restore(env: &mut TypeEnv, name: &str, prev: Option<SimpleType>) {
    match prev {
        Some(t) => {
            env.insert(name.to_string(), t);
        }
        None => {
            env.remove(name);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_formula;
    use super::*;

    fn ty(s: &str) -> Result<SimpleType, TypeError> {
        simple_typecheck(&TypeEnv::new(), &parse_formula(s).unwrap())
    }

    #[test]
    fn typing_examples() {
        assert_eq!(ty(r"(mu F:*->*. \X:*. X \/ F (avg X)) p").unwrap(), SimpleType::Prop);
        assert_eq!(ty(r"\X:*. X").unwrap(), SimpleType::first_order(1));
        let e = ty(r"(p \/ q) r").unwrap_err();
        assert!(e.msg.contains("cannot be applied"), "{e}");
        assert!(ty(r"mu X:*->*. X").is_ok());
        assert!(ty(r"mu X:*->*. p").is_err());
        assert!(ty(r"avg (\X. X)").is_err());
    }

    #[test]
    fn orders() {
        let o = |s: &str| order_of(&parse_formula(s).unwrap(), &TypeEnv::new()).unwrap();
        assert_eq!(o(r"mu X. p \/ avg X"), 0);
        assert_eq!(o(r"nu X. [avg X] >= 1/2 /\ box X"), 0);
        assert_eq!(o(r"(mu F:*->*. \X. X \/ F (avg X)) p"), 1);
        assert_eq!(o(r"\G:*->*. G p"), 2);
        assert_eq!(o(r"(\X. X) p"), 1);
    }
}
