//! Translations of probabilistic automata, the higher-order fixpoint arithmetic and order-1
//! probabilistic recursion schemes into model-checking instances, with brute-force oracles.

mod automaton;
mod muarith;
mod phors;

use alloc::string::String;
use core::fmt;

pub use automaton::{
    accept_prob, accept_prob_idx, max_accept_upto, reduce_value1, theta, theta_applied, value1_chain, ProbAutomaton, ACCEPT_ATOM,
};
pub use muarith::{
    eval_muarith_bounded, muarith_chain, parse_muarith, reduce_muarith, translate, translate_muarith, typecheck_muarith, MuFormula,
    MuType, MuValue,
};
pub use phors::{ladder, parse_pterm, phors_chain, phors_term_bound, reduce_phors, PTerm, Phors, PhorsRule};

use crate::formula::Formula;
use crate::markov::MarkovChain;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FragmentNote {
    General,
    DecidableMuOnly,
    Decidable,
}

impl FragmentNote {
    pub fn name(self) -> &'static str {
        match self {
            FragmentNote::General => "general",
            FragmentNote::DecidableMuOnly => "decidable-mu-only",
            FragmentNote::Decidable => "decidable",
        }
    }
}

/// A chain and a closed formula of type `*` over its atoms.
#[derive(Clone, Debug)]
pub struct Instance {
    pub chain: MarkovChain,
    pub formula: Formula,
    pub fragment: FragmentNote,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReductionError {
    EmptyAlphabet,
    UnknownSymbol(String),
    InvalidAutomaton(String),
    InvalidPhors(String),
    IllTyped(String),
    Chain(String),
}

impl fmt::Display for ReductionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReductionError::EmptyAlphabet => write!(f, "the alphabet is empty"),
            ReductionError::UnknownSymbol(c) => write!(f, "symbol `{c}` is not in the alphabet"),
            ReductionError::InvalidAutomaton(m) => write!(f, "invalid automaton: {m}"),
            ReductionError::InvalidPhors(m) => write!(f, "invalid recursion scheme: {m}"),
            ReductionError::IllTyped(m) => write!(f, "ill-typed arithmetic formula: {m}"),
            ReductionError::Chain(m) => write!(f, "{m}"),
        }
    }
}
