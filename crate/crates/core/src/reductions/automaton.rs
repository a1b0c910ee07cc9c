use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use num_traits::{One, Zero};

use super::{FragmentNote, Instance, ReductionError};
use crate::formula::{Binder, Formula, SimpleType, ThresholdBound};
use crate::markov::MarkovChain;
use crate::rational::Rational;

/// `(Q, Σ, q_I, Δ, F)` with `delta[q][c][q']`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbAutomaton {
    states: Vec<String>,
    alphabet: Vec<String>,
    init: usize,
    delta: Vec<Vec<Vec<Rational>>>,
    accepting: Vec<bool>,
}

impl ProbAutomaton {
    /// Missing `(q, c, q')` entries are 0; every `Δ(q, c)` must sum to 1.
    pub fn new(
        states: Vec<String>,
        alphabet: Vec<String>,
        init: &str,
        accepting: Vec<String>,
        delta: Vec<(String, String, String, Rational)>,
    ) -> Result<Self, ReductionError> {
        let bad = |msg: String| Err(ReductionError::InvalidAutomaton(msg));
        if states.is_empty() {
            return bad(String::from("no states"));
        }
        if alphabet.is_empty() {
            return Err(ReductionError::EmptyAlphabet);
        }
        for (what, list) in [("state", &states), ("symbol", &alphabet)] {
            let set: BTreeSet<&String> = list.iter().collect();
            if set.len() != list.len() {
                return bad(format!("duplicate {what}"));
            }
        }
        let q = |s: &str| states.iter().position(|x| x == s).ok_or_else(|| ReductionError::InvalidAutomaton(format!("unknown state `{s}`")));
        let c = |s: &str| alphabet.iter().position(|x| x == s).ok_or_else(|| ReductionError::UnknownSymbol(String::from(s)));
        let (n, k) = (states.len(), alphabet.len());
        let mut d = alloc::vec![alloc::vec![alloc::vec![Rational::zero(); n]; k]; n];
        for (from, sym, to, p) in delta {
            if p < Rational::zero() || p > Rational::one() {
                return bad(format!("probability {p} out of range"));
            }
            let (i, a, j) = (q(&from)?, c(&sym)?, q(&to)?);
            d[i][a][j] += p;
        }
        for i in 0..n {
            for a in 0..k {
                let s: Rational = d[i][a].iter().sum();
                if !s.is_one() {
                    return bad(format!("Δ({}, {}) sums to {s}", states[i], alphabet[a]));
                }
            }
        }
        let init = q(init)?;
        let mut acc = alloc::vec![false; n];
        for s in &accepting {
            acc[q(s)?] = true;
        }
        Ok(ProbAutomaton { states, alphabet, init, delta: d, accepting: acc })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }
    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }
    pub fn init(&self) -> usize {
        self.init
    }
    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }
    /// `Δ(q, c)(q')`.
    pub fn prob(&self, q: usize, c: usize, q2: usize) -> &Rational {
        &self.delta[q][c][q2]
    }
    /// The same automaton started in state `q`.
    pub fn with_init(mut self, q: usize) -> Self {
        assert!(q < self.states.len(), "state index out of range");
        self.init = q;
        self
    }
    pub fn symbol_index(&self, c: &str) -> Option<usize> {
        self.alphabet.iter().position(|x| x == c)
    }
}

/// `A(w)` for a word of symbol names.
pub fn accept_prob(a: &ProbAutomaton, w: &[&str]) -> Result<Rational, ReductionError> {
    let idx: Vec<usize> = w
        .iter()
        .map(|c| a.symbol_index(c).ok_or_else(|| ReductionError::UnknownSymbol(String::from(*c))))
        .collect::<Result<_, _>>()?;
    Ok(accept_prob_idx(a, &idx))
}

/// `A(w)` for a word of symbol indices.
pub fn accept_prob_idx(a: &ProbAutomaton, w: &[usize]) -> Rational {
    let n = a.states.len();
    let mut dist = alloc::vec![Rational::zero(); n];
    dist[a.init] = Rational::one();
    for &c in w {
        let mut next = alloc::vec![Rational::zero(); n];
        for (q, mass) in dist.iter().enumerate() {
            if mass.is_zero() {
                continue;
            }
            for (q2, p) in a.delta[q][c].iter().enumerate() {
                if !p.is_zero() {
                    next[q2] += mass * p;
                }
            }
        }
        dist = next;
    }
    dist.iter().enumerate().filter(|(q, _)| a.accepting[*q]).map(|(_, m)| m.clone()).sum()
}

/// `max_{|w| <= k} A(w)` by enumerating all words.
pub fn max_accept_upto(a: &ProbAutomaton, k: usize) -> Rational {
    let sigma = a.alphabet.len();
    let mut best = accept_prob_idx(a, &[]);
    let mut word: Vec<usize> = Vec::new();
    for len in 1..=k {
        word.clear();
        word.resize(len, 0);
        loop {
            let v = accept_prob_idx(a, &word);
            if v > best {
                best = v;
            }
            // Next word of this length in lexicographic order.
            let mut i = len;
            while i > 0 && word[i - 1] + 1 == sigma {
                word[i - 1] = 0;
                i -= 1;
            }
            if i == 0 {
                break;
            }
            word[i - 1] += 1;
        }
    }
    best
}

fn symbol_atom(c: &str) -> String {
    format!("p_{c}")
}

pub const ACCEPT_ATOM: &str = "pF";

/// The chain `M_A` on `Q ⊎ (Q × Σ)`.
pub fn value1_chain(a: &ProbAutomaton) -> Result<MarkovChain, ReductionError> {
    let mut names: Vec<String> = a.states.clone();
    let mut taken: BTreeSet<String> = names.iter().cloned().collect();
    let mut pair = alloc::vec![alloc::vec![String::new(); a.alphabet.len()]; a.states.len()];
    for (q, qs) in a.states.iter().enumerate() {
        for (c, cs) in a.alphabet.iter().enumerate() {
            let mut name = format!("{qs}_{cs}");
            while taken.contains(&name) {
                name.push('\'');
            }
            taken.insert(name.clone());
            pair[q][c] = name.clone();
            names.push(name);
        }
    }
    let share = Rational::new(1.into(), (a.alphabet.len() as i64).into());
    let mut trans = Vec::new();
    for q in 0..a.states.len() {
        for c in 0..a.alphabet.len() {
            trans.push((a.states[q].clone(), pair[q][c].clone(), share.clone()));
            for q2 in 0..a.states.len() {
                let p = &a.delta[q][c][q2];
                if !p.is_zero() {
                    trans.push((pair[q][c].clone(), a.states[q2].clone(), p.clone()));
                }
            }
        }
    }
    let mut labels: Vec<(String, Vec<String>)> =
        a.alphabet.iter().enumerate().map(|(c, cs)| (symbol_atom(cs), (0..a.states.len()).map(|q| pair[q][c].clone()).collect())).collect();
    labels.push((String::from(ACCEPT_ATOM), (0..a.states.len()).filter(|&q| a.accepting[q]).map(|q| a.states[q].clone()).collect()));
    MarkovChain::new(names, trans, labels, &a.states[a.init]).map_err(|e| ReductionError::Chain(format!("{e}")))
}

/// `θ_A = μF:*->*. λX. X ∨ ⋁_c F (f_c X)` with `f_c = λX. ◇(p_c ∧ Avg X)`.
pub fn theta(a: &ProbAutomaton) -> Formula {
    let f = || Formula::var("F");
    let x = || Formula::var("X");
    let steps = a.alphabet.iter().map(|c| Formula::app(f(), Formula::dia(Formula::and(Formula::atom(symbol_atom(c)), Formula::avg(x())))));
    let body = Formula::lam(Binder::prop("X"), Formula::or(x(), Formula::or_all(steps)));
    Formula::mu(Binder::new("F", SimpleType::first_order(1)), body)
}

/// `θ_A ⌈p_F⌉`, whose value at `q_I` is `val(A)`.
pub fn theta_applied(a: &ProbAutomaton) -> Formula {
    Formula::app(theta(a), Formula::atom(ACCEPT_ATOM))
}

/// `M_A` with `φ_A = [θ_A ⌈p_F⌉] >= 1`.
pub fn reduce_value1(a: &ProbAutomaton) -> Result<Instance, ReductionError> {
    let chain = value1_chain(a)?;
    let formula = Formula::threshold(theta_applied(a), ThresholdBound::ge(Rational::one()).expect("1 is a valid bound"));
    Ok(Instance { chain, formula, fragment: FragmentNote::General })
}

