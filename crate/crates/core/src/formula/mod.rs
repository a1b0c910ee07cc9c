//! PHFL syntax: the AST, the surface parser and printer, substitution and simple typing.

mod ast;
mod parse;
mod print;
mod subst;
mod typing;

pub use ast::{Binder, BoundError, BoundKind, FixKind, Formula, NamedTU, RefinedAnnot, SimpleType, ThresholdBound};
pub use parse::{parse_formula, parse_formula_with_vars, parse_type_annot, ParseError};
#[allow(unused_imports)]
pub(crate) use parse::{Cursor, Tok};
pub use subst::{
    all_var_names, alpha_eq, beta_normalize, fresh_name, free_vars, substitute, unfold_fixpoint, uniquify_binders,
    NotAFixpoint,
};
pub use typing::{order_of, simple_typecheck, TypeEnv, TypeError};
