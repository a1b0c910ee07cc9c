use alloc::collections::BTreeSet;
use alloc::string::String;
use core::fmt;

use super::ast::{Binder, Formula};
use super::parse::reserved_names;
use super::subst::{all_var_names, fresh_name, substitute};

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let reserved = reserved_names(&self.atoms());
        let needs_rename = has_clash(self, &reserved);
        if needs_rename {
            let fixed = rename_clashes(self, &reserved);
            write_formula(f, &fixed, 0)
        } else {
            write_formula(f, self, 0)
        }
    }
}

fn has_clash(phi: &Formula, reserved: &BTreeSet<String>) -> bool {
    match phi {
        Formula::Mu(b, _) | Formula::Nu(b, _) | Formula::Lam(b, _) if reserved.contains(&b.name) => true,
        _ => phi.children().iter().any(|c| has_clash(c, reserved)),
    }
}

fn rename_clashes(phi: &Formula, reserved: &BTreeSet<String>) -> Formula {
    let rebuild = |b: Binder, body: Formula| match phi {
        Formula::Mu(..) => Formula::mu(b, body),
        Formula::Nu(..) => Formula::nu(b, body),
        _ => Formula::lam(b, body),
    };
    match phi {
        Formula::Mu(b, body) | Formula::Nu(b, body) | Formula::Lam(b, body) => {
            let body = rename_clashes(body, reserved);
            if reserved.contains(&b.name) {
                let mut taken = reserved.clone();
                taken.extend(all_var_names(&body));
                let new = fresh_name(&b.name, &taken);
                let body = substitute(&body, &b.name, &Formula::Var(new.clone()));
                rebuild(b.renamed(new), body)
            } else {
                rebuild(b.clone(), body)
            }
        }
        Formula::Or(a, b) => Formula::or(rename_clashes(a, reserved), rename_clashes(b, reserved)),
        Formula::And(a, b) => Formula::and(rename_clashes(a, reserved), rename_clashes(b, reserved)),
        Formula::App(a, b) => Formula::app(rename_clashes(a, reserved), rename_clashes(b, reserved)),
        Formula::Threshold(a, j) => Formula::threshold(rename_clashes(a, reserved), j.clone()),
        Formula::Box(a) => Formula::boxed(rename_clashes(a, reserved)),
        Formula::Dia(a) => Formula::dia(rename_clashes(a, reserved)),
        Formula::Avg(a) => Formula::avg(rename_clashes(a, reserved)),
        _ => phi.clone(),
    }
}

// Levels: 0 binder, 1 or, 2 and, 3 application, 4 modality, 5 atomic.
fn write_formula(f: &mut fmt::Formatter<'_>, phi: &Formula, level: u8) -> fmt::Result {
    let paren = |f: &mut fmt::Formatter<'_>, own: u8, body: &dyn Fn(&mut fmt::Formatter<'_>) -> fmt::Result| {
        if level > own {
            write!(f, "(")?;
            body(f)?;
            write!(f, ")")
        } else {
            body(f)
        }
    };
    match phi {
        Formula::Top => write!(f, "top"),
        Formula::Bot => write!(f, "bot"),
        Formula::Atom(a) | Formula::Var(a) => write!(f, "{a}"),
        Formula::Threshold(a, j) => {
            write!(f, "[")?;
            write_formula(f, a, 0)?;
            write!(f, "] {j}")
        }
        Formula::Or(a, b) => paren(f, 1, &|f| {
            write_formula(f, a, 1)?;
            write!(f, " \\/ ")?;
            write_formula(f, b, 2)
        }),
        Formula::And(a, b) => paren(f, 2, &|f| {
            write_formula(f, a, 2)?;
            write!(f, " /\\ ")?;
            write_formula(f, b, 3)
        }),
        Formula::App(a, b) => paren(f, 3, &|f| {
            write_formula(f, a, 3)?;
            write!(f, " ")?;
            write_formula(f, b, 5)
        }),
        Formula::Box(a) | Formula::Dia(a) | Formula::Avg(a) => {
            let kw = match phi {
                Formula::Box(_) => "box",
                Formula::Dia(_) => "dia",
                _ => "avg",
            };
            paren(f, 4, &|f| {
                write!(f, "{kw} ")?;
                write_formula(f, a, 4)
            })
        }
        Formula::Mu(b, body) | Formula::Nu(b, body) | Formula::Lam(b, body) => {
            let kw = match phi {
                Formula::Mu(..) => "mu ",
                Formula::Nu(..) => "nu ",
                _ => "\\",
            };
            paren(f, 0, &|f| {
                write!(f, "{kw}{}", b.name)?;
                match &b.refined {
                    Some(r) => write!(f, ":{r}")?,
                    None => write!(f, ":{}", b.ty)?,
                }
                write!(f, ". ")?;
                write_formula(f, body, 0)
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{alpha_eq, parse_formula};
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn prints_reparseable_text() {
        for src in [
            r"(mu F:*->*. \X. X \/ F (avg X)) p",
            r"[dia q] >= 1/2",
            r"a \/ b /\ c",
            r"(a \/ b) /\ c",
            r"avg (avg p)",
            r"nu X. p /\ [avg X] > 1/3",
            r"mu F:{1;}->{;}. \X. F (avg X)",
            r"(\X. X) (\Y. Y) p",
        ] {
            let f = parse_formula(src).unwrap();
            let printed = f.to_string();
            let g = parse_formula(&printed).unwrap();
            assert!(alpha_eq(&f, &g), "{src} -> {printed}");
        }
    }

    #[test]
    fn binder_named_like_an_atom_is_renamed() {
        let f = Formula::app(Formula::lam(Binder::prop("p"), Formula::var("p")), Formula::atom("p"));
        let printed = f.to_string();
        let g = parse_formula(&printed).unwrap();
        assert!(alpha_eq(&f, &g), "{printed}");
    }
}
