//! Core algorithms for probabilistic higher-order fixpoint logic over finite Markov chains.
#![no_std]

extern crate alloc;

pub mod formula;
pub mod markov;
pub mod rational;
pub mod scalar;

pub use formula::{parse_formula, Formula, SimpleType};
pub use markov::{MarkovChain, StateSet};
pub use rational::Rational;
pub mod eval;
pub mod refined;
pub mod affine;
pub mod smt;
pub mod reductions;
