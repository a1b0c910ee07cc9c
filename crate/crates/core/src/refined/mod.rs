//! Refined types `<T,U>` over a fixed chain, and the type system carving out the decidable fragment.

mod check;
mod types;

pub use check::{
    check_mup_embedding, check_refined, check_refined_with, infer_refined, infer_refined_with, validate_derivation,
    RefineConfig, RefineError, RefinedDerivation, Rule,
};
pub use types::{PropTU, RefinedEnv, RefinedType};
