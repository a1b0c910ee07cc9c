//! Finite Markov chains with exact transition probabilities.
//!
//! States are indexed in the order they were given; that order is the index order of every
//! vector and coefficient tensor built over the chain.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use num_traits::{One, Zero};

use crate::rational::Rational;
use crate::scalar::Scalar;

/// A subset of the states of a chain, stored as a membership table.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct StateSet {
    bits: Vec<bool>,
}

impl StateSet {
    pub fn empty(n: usize) -> Self {
        StateSet { bits: vec![false; n] }
    }
    pub fn full(n: usize) -> Self {
        StateSet { bits: vec![true; n] }
    }
    pub fn from_indices(n: usize, idx: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(n);
        for i in idx {
            s.bits[i] = true;
        }
        s
    }
    pub fn from_fn(n: usize, f: impl Fn(usize) -> bool) -> Self {
        StateSet { bits: (0..n).map(f).collect() }
    }
    /// Size of the underlying state space.
    pub fn universe(&self) -> usize {
        self.bits.len()
    }
    pub fn contains(&self, i: usize) -> bool {
        self.bits[i]
    }
    pub fn insert(&mut self, i: usize) {
        self.bits[i] = true;
    }
    pub fn len(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }
    pub fn is_full(&self) -> bool {
        self.bits.iter().all(|b| *b)
    }
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i)
    }
    pub fn union(&self, o: &StateSet) -> StateSet {
        StateSet { bits: self.bits.iter().zip(&o.bits).map(|(a, b)| *a || *b).collect() }
    }
    pub fn intersection(&self, o: &StateSet) -> StateSet {
        StateSet { bits: self.bits.iter().zip(&o.bits).map(|(a, b)| *a && *b).collect() }
    }
    pub fn difference(&self, o: &StateSet) -> StateSet {
        StateSet { bits: self.bits.iter().zip(&o.bits).map(|(a, b)| *a && !*b).collect() }
    }
    pub fn complement(&self) -> StateSet {
        StateSet { bits: self.bits.iter().map(|b| !*b).collect() }
    }
    pub fn is_subset(&self, o: &StateSet) -> bool {
        self.bits.iter().zip(&o.bits).all(|(a, b)| !*a || *b)
    }
    pub fn is_disjoint(&self, o: &StateSet) -> bool {
        self.bits.iter().zip(&o.bits).all(|(a, b)| !(*a && *b))
    }
}

/// Errors raised while building a chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChainError {
    NoStates,
    DuplicateState(String),
    UnknownState { context: String, name: String },
    DuplicateTransition { from: String, to: String },
    ProbabilityOutOfRange { from: String, to: String, p: String },
    RowSum { state: String, sum: String },
    InconsistentComplement(String),
    BadAtomName(String),
}

impl fmt::Display for ChainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainError::NoStates => write!(f, "chain has no states"),
            ChainError::DuplicateState(s) => write!(f, "duplicate state name `{s}`"),
            ChainError::UnknownState { context, name } => write!(f, "unknown state `{name}` in {context}"),
            ChainError::DuplicateTransition { from, to } => write!(f, "transition {from} -> {to} listed twice"),
            ChainError::ProbabilityOutOfRange { from, to, p } => {
                write!(f, "probability {p} of {from} -> {to} is outside [0,1]")
            }
            ChainError::RowSum { state, sum } => write!(f, "outgoing probabilities of state `{state}` sum to {sum}, not 1"),
            ChainError::InconsistentComplement(a) => {
                write!(f, "atom `{a}` and its complement do not partition the states")
            }
            ChainError::BadAtomName(a) => write!(f, "invalid atom name `{a}`"),
        }
    }
}

/// A finite Markov chain: states, a row-stochastic rational matrix, a labeling and an initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovChain {
    states: Vec<String>,
    probs: Vec<Vec<Rational>>,
    succ: Vec<Vec<usize>>,
    labels: BTreeMap<String, StateSet>,
    init: usize,
}

/// Name of the complement atom of `atom`.
pub fn complement_atom(atom: &str) -> String {
    match atom.strip_prefix('~') {
        Some(base) => String::from(base),
        None => format!("~{atom}"),
    }
}

impl MarkovChain {
    /// Validates and builds a chain. Missing transitions have probability 0. Every atom gets a
    /// complement atom `~p` unless one is already present.
    pub fn new(
        states: Vec<String>,
        transitions: Vec<(String, String, Rational)>,
        labels: Vec<(String, Vec<String>)>,
        init: &str,
    ) -> Result<Self, ChainError> {
        if states.is_empty() {
            return Err(ChainError::NoStates);
        }
        let n = states.len();
        let mut index = BTreeMap::new();
        for (i, s) in states.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(ChainError::DuplicateState(s.clone()));
            }
        }
        let lookup = |context: &str, name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| ChainError::UnknownState { context: String::from(context), name: String::from(name) })
        };
        let mut probs = vec![vec![Rational::zero(); n]; n];
        let mut seen = vec![vec![false; n]; n];
        for (from, to, p) in transitions {
            let i = lookup("transition", &from)?;
            let j = lookup("transition", &to)?;
            if seen[i][j] {
                return Err(ChainError::DuplicateTransition { from, to });
            }
            seen[i][j] = true;
            if p < Rational::zero() || p > Rational::one() {
                return Err(ChainError::ProbabilityOutOfRange { from, to, p: format!("{p}") });
            }
            probs[i][j] = p;
        }
        for (i, row) in probs.iter().enumerate() {
            let sum = row.iter().fold(Rational::zero(), |a, b| a + b);
            if !sum.is_one() {
                return Err(ChainError::RowSum { state: states[i].clone(), sum: format!("{sum}") });
            }
        }
        let init = lookup("init", init)?;
        let mut given: BTreeMap<String, StateSet> = BTreeMap::new();
        for (atom, members) in labels {
            if atom.is_empty() || atom == "~" || atom.starts_with("~~") {
                return Err(ChainError::BadAtomName(atom));
            }
            let mut set = StateSet::empty(n);
            for m in members {
                set.insert(lookup(&format!("label `{atom}`"), &m)?);
            }
            if let Some(prev) = given.get(&atom) {
                if *prev != set {
                    return Err(ChainError::InconsistentComplement(atom));
                }
            }
            given.insert(atom, set);
        }
        let mut labels = given.clone();
        for (atom, set) in &given {
            let comp = complement_atom(atom);
            match given.get(&comp) {
                Some(other) if *other != set.complement() => return Err(ChainError::InconsistentComplement(atom.clone())),
                Some(_) => {}
                None => {
                    labels.insert(comp, set.complement());
                }
            }
        }
        let succ = probs
            .iter()
            .map(|row| row.iter().enumerate().filter(|(_, p)| !p.is_zero()).map(|(j, _)| j).collect())
            .collect();
        Ok(MarkovChain { states, probs, succ, labels, init })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
    pub fn states(&self) -> &[String] {
        &self.states
    }
    pub fn state_name(&self, i: usize) -> &str {
        &self.states[i]
    }
    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }
    pub fn init(&self) -> usize {
        self.init
    }
    pub fn prob(&self, i: usize, j: usize) -> &Rational {
        &self.probs[i][j]
    }
    pub fn matrix(&self) -> &[Vec<Rational>] {
        &self.probs
    }
    /// Positive-probability successors of `i`, in index order. Never empty.
    pub fn successors(&self, i: usize) -> &[usize] {
        &self.succ[i]
    }
    pub fn successor_set(&self, i: usize) -> StateSet {
        StateSet::from_indices(self.len(), self.succ[i].iter().copied())
    }
    pub fn label(&self, atom: &str) -> Option<&StateSet> {
        self.labels.get(atom)
    }
    pub fn labels(&self) -> &BTreeMap<String, StateSet> {
        &self.labels
    }
    pub fn full_set(&self) -> StateSet {
        StateSet::full(self.len())
    }
    /// Nonzero transitions as `(from, to, p)` in row-major order.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize, &Rational)> + '_ {
        self.succ.iter().enumerate().flat_map(move |(i, js)| js.iter().map(move |&j| (i, j, &self.probs[i][j])))
    }
    /// Sparse rows `(successor, probability)` converted to `N`.
    pub fn sparse_rows<N: Scalar>(&self) -> Vec<Vec<(usize, N)>> {
        self.succ
            .iter()
            .enumerate()
            .map(|(i, js)| js.iter().map(|&j| (j, N::from_rational(&self.probs[i][j]))).collect())
            .collect()
    }

    /// `{ s | some successor of s is in t }`.
    pub fn pre_exists(&self, t: &StateSet) -> StateSet {
        StateSet::from_fn(self.len(), |s| self.succ[s].iter().any(|&j| t.contains(j)))
    }
    /// `{ s | every successor of s is in t }`.
    pub fn pre_forall(&self, t: &StateSet) -> StateSet {
        StateSet::from_fn(self.len(), |s| self.succ[s].iter().all(|&j| t.contains(j)))
    }

    pub fn embedded_kripke(&self) -> KripkeStructure {
        KripkeStructure {
            states: self.states.clone(),
            relation: self.transitions().map(|(i, j, _)| (i, j)).collect(),
            labels: self.labels.clone(),
            init: self.init,
        }
    }

    pub fn set_names(&self, s: &StateSet) -> Vec<&str> {
        s.iter().map(|i| self.states[i].as_str()).collect()
    }
}

/// The underlying transition graph of a chain.
#[derive(Clone, Debug, PartialEq)]
pub struct KripkeStructure {
    pub states: Vec<String>,
    pub relation: Vec<(usize, usize)>,
    pub labels: BTreeMap<String, StateSet>,
    pub init: usize,
}

impl KripkeStructure {
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.relation.contains(&(i, j))
    }
}
